#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "stokes_bie/report.hpp"
#include "stokes_bie/verify.hpp"

namespace stokes_bie {
namespace {

IdentityCheckOptions quick(double h_scale = 1.0) {
  IdentityCheckOptions options;
  options.samples = 20;
  options.h_scale = h_scale;
  return options;
}

TEST(IdentitySuite, PassesForTheKernels) {
  const VerificationReport report = run_identity_suite(quick());
  ASSERT_FALSE(report.checks.empty());
  for (const auto& check : report.checks) EXPECT_TRUE(check.passed()) << check.name << ": " << check.residual;
  EXPECT_TRUE(report.all_passed());
}

TEST(IdentitySuite, DetectsAScaledKernel) {
  for (double scale : {1.01, 0.5}) {
    EXPECT_FALSE(check_h_identities_3d(quick(scale)).all_passed());
    EXPECT_FALSE(check_h_identities_2d(quick(scale)).all_passed());
  }
}

TEST(IdentitySuite, DeterministicForAFixedSeed) {
  const VerificationReport first = run_identity_suite(quick());
  const VerificationReport second = run_identity_suite(quick());
  ASSERT_EQ(first.checks.size(), second.checks.size());
  for (std::size_t i = 0; i < first.checks.size(); ++i) EXPECT_EQ(first.checks[i].residual, second.checks[i].residual);
}

TEST(IdentitySuite, RejectsEmptySampleCount) {
  IdentityCheckOptions options = quick();
  options.samples = 0;
  EXPECT_THROW(run_identity_suite(options), std::invalid_argument);
}

TEST(CheckResult, NanFails) {
  const CheckResult nan_check{"nan", std::nan(""), 1.0};
  const CheckResult ok{"ok", 0.5, 1.0};
  EXPECT_FALSE(nan_check.passed());
  EXPECT_TRUE(ok.passed());
  VerificationReport report;
  report.checks = {ok};
  EXPECT_TRUE(report.all_passed());
  VerificationReport other;
  other.checks = {nan_check};
  report.merge(other);
  EXPECT_EQ(report.checks.size(), 2u);
  EXPECT_FALSE(report.all_passed());
}

TEST(ReferenceMeshes, MatchWithinAQuarter) {
  EXPECT_EQ(comparable_reference_mesh(376), ReferenceMesh::coarse);
  EXPECT_EQ(comparable_reference_mesh(320), ReferenceMesh::coarse);
  EXPECT_EQ(comparable_reference_mesh(1280), ReferenceMesh::fine);
  EXPECT_EQ(comparable_reference_mesh(1504), ReferenceMesh::fine);
  EXPECT_FALSE(comparable_reference_mesh(80).has_value());
  EXPECT_FALSE(comparable_reference_mesh(5120).has_value());
  EXPECT_FALSE(comparable_reference_mesh(800).has_value());
}

TEST(GradientProblems, ParseRoundTrip) {
  for (auto p : {GradientProblem::a, GradientProblem::b, GradientProblem::c}) {
    EXPECT_EQ(parse_gradient_problem(to_string(p)), p);
  }
  EXPECT_THROW(parse_gradient_problem("d"), std::invalid_argument);
  EXPECT_THROW(parse_gradient_problem(""), std::invalid_argument);
}

TEST(HomogeneousTable, ReferencesAttachOnlyOnComparableMeshes) {
  const TableRun coarse = run_homogeneous_test(make_icosphere(1), {});
  ASSERT_EQ(coarse.table.rows.size(), 6u);
  for (const auto& row : coarse.table.rows) {
    EXPECT_EQ(row.reference, 0.0);
    EXPECT_TRUE(std::isnan(reference_ratio(row)));
  }
  const TableRun comparable = run_homogeneous_test(make_icosphere(2), {});
  ASSERT_EQ(comparable.table.rows.size(), 6u);
  EXPECT_EQ(comparable.table.rows[0].field, "u");
  EXPECT_EQ(comparable.table.rows[3].field, "tau");
  EXPECT_DOUBLE_EQ(comparable.table.rows[0].reference, 1.094e-4);
  EXPECT_DOUBLE_EQ(comparable.table.rows[5].reference, 2.347e-4);

  HomogeneousProblem other_viscosity;
  other_viscosity.mu = 2.0;
  for (const auto& row : run_homogeneous_test(make_icosphere(2), other_viscosity).table.rows) {
    EXPECT_EQ(row.reference, 0.0);
  }
}

TEST(HomogeneousTable, RejectsSourceInsideTheFluid) {
  HomogeneousProblem problem;
  problem.source = Vec3(0.1, 0.0, 0.0);
  EXPECT_THROW(run_homogeneous_test(make_icosphere(1), problem), std::invalid_argument);
}

TEST(Report, JsonStructure) {
  VerificationReport report;
  report.checks.push_back({"a check", 1e-7, 1e-5});
  TableRun run;
  run.table.name = "demo";
  run.set("elements", "80");
  run.table.add("u", "x", 2e-4, 1e-4);
  run.table.add("u", "y", 3e-4);
  report.tables.push_back(run);
  const Provenance provenance{"stokes-bie verify", {{"seed", "1"}}};
  const auto doc = to_json(report, provenance);
  EXPECT_EQ(doc["provenance"]["command"], "stokes-bie verify");
  EXPECT_EQ(doc["provenance"]["config"]["seed"], "1");
  EXPECT_EQ(doc["checks"][0]["name"], "a check");
  EXPECT_EQ(doc["checks"][0]["pass"], true);
  EXPECT_EQ(doc["tables"][0]["settings"]["elements"], "80");
  EXPECT_DOUBLE_EQ(doc["tables"][0]["rows"][0]["ratio"].get<double>(), 2.0);
  EXPECT_TRUE(doc["tables"][0]["rows"][1]["reference"].is_null());
  EXPECT_TRUE(doc["tables"][0]["rows"][1]["ratio"].is_null());
  EXPECT_EQ(doc["all_passed"], true);
  EXPECT_EQ(doc.dump(), to_json(report, provenance).dump());
}

TEST(Report, CsvStructure) {
  TableRun run;
  run.table.name = "demo";
  run.table.add("grad_u", "u1,2", 2e-4, 1e-4);
  run.table.add("u", "x", 3e-4);
  const Provenance provenance{"cmd", {}};
  std::ostringstream tables;
  write_tables_csv(tables, {run}, provenance);
  const std::string text = tables.str();
  EXPECT_EQ(text.rfind("# command: cmd\n", 0), 0u);
  EXPECT_NE(text.find("field,component,error,reference,ratio\n"), std::string::npos);
  EXPECT_NE(text.find("grad_u,\"u1,2\",2.000000e-04,1.000000e-04,2.000000e+00\n"), std::string::npos);
  EXPECT_NE(text.find("u,\"x\",3.000000e-04,,\n"), std::string::npos);

  std::ostringstream checks;
  write_checks_csv(checks, {{"c", 2.0, 1.0}}, provenance);
  EXPECT_NE(checks.str().find("\"c\",2.000000e+00,1.000000e+00,false\n"), std::string::npos);
}

TEST(GradientDifference, ZeroForEqualFieldsAndMeanSquareOtherwise) {
  GradientField first;
  first.values.assign(4, Mat3::Zero());
  GradientField second = first;
  EXPECT_EQ(gradient_difference(first, second), 0.0);
  second.values[0](1, 2) = 2.0;
  // Mean of squares over four nodes is 1, root is 1.
  EXPECT_NEAR(gradient_difference(first, second), 1.0, 1e-14);
}

}  // namespace
}  // namespace stokes_bie
