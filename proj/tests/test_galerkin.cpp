#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <memory>
#include <set>

#include "stokes_bie/galerkin.hpp"
#include "stokes_bie/kernels.hpp"

namespace stokes_bie {
namespace {

const SurfaceMesh& sphere2() {
  static const SurfaceMesh mesh = make_icosphere(2);
  return mesh;
}

std::shared_ptr<const BoundaryOperators> operators2() {
  static const auto ops = std::make_shared<const BoundaryOperators>(assemble_operators(sphere2(), 1.0));
  return ops;
}

Eigen::VectorXd constant_field(int nodes, const Vec3& c) {
  Eigen::VectorXd v(3 * nodes);
  for (int a = 0; a < nodes; ++a) v.segment<3>(3 * a) = c;
  return v;
}

TEST(Operators, RigidBodyResidualVanishes) {
  const auto& ops = *operators2();
  const int n = ops.num_nodes();
  const Eigen::VectorXd u = constant_field(n, Vec3(0.3, -1.2, 0.7));
  const Eigen::MatrixXd mass3 = expanded_mass(ops.mass);
  // Regularized operator: exact by construction.
  EXPECT_LT((ops.exterior_limit(DomainKind::interior) * u).norm(), 1e-10 * u.norm());
  // Raw quadrature: the identity holds to quadrature accuracy.
  const Eigen::VectorXd raw = ops.double_layer_raw * u - 0.5 * mass3 * u;
  EXPECT_LT(raw.norm() / (mass3 * u).norm(), 2e-3);
  for (const Mat3& m : double_layer_row_identity(ops, 0.5)) EXPECT_LT((m - Mat3::Identity()).cwiseAbs().maxCoeff(), 2e-3);
  for (const Mat3& m : double_layer_row_identity(ops, -0.5)) EXPECT_LT(m.cwiseAbs().maxCoeff(), 2e-3);
}

TEST(Operators, SingleLayerSymmetric) {
  const auto& ops = *operators2();
  EXPECT_LT((ops.single_layer - ops.single_layer.transpose()).norm() / ops.single_layer.norm(), 1e-6);
}

TEST(Operators, LimitMatricesDifferByMass) {
  const auto& ops = *operators2();
  const Eigen::MatrixXd mass3 = expanded_mass(ops.mass);
  for (auto domain : {DomainKind::interior, DomainKind::exterior}) {
    const Eigen::MatrixXd diff = ops.interior_limit(domain) - ops.exterior_limit(domain);
    EXPECT_LT((diff - mass3).norm(), 1e-12 * mass3.norm());
  }
  const Eigen::MatrixXd sum = ops.exterior_limit(DomainKind::interior) + ops.exterior_limit(DomainKind::exterior);
  EXPECT_LT((sum + mass3).norm(), 1e-12 * mass3.norm());
}

TEST(Operators, AssemblyIndependentOfThreadCount) {
  const SurfaceMesh mesh = make_icosphere(1);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const BoundaryOperators one = assemble_operators(mesh, 0.8);
  omp_set_num_threads(3);
  const BoundaryOperators three = assemble_operators(mesh, 0.8);
  omp_set_num_threads(saved);
  EXPECT_EQ((one.single_layer - three.single_layer).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((one.double_layer - three.double_layer).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Operators, SingleLayerScalesWithInverseViscosity) {
  const SurfaceMesh mesh = make_icosphere(0);
  const BoundaryOperators a = assemble_operators(mesh, 1.0);
  const BoundaryOperators b = assemble_operators(mesh, 2.0);
  EXPECT_LT((a.single_layer - 2.0 * b.single_layer).norm(), 1e-13 * a.single_layer.norm());
  EXPECT_LT((a.double_layer - b.double_layer).norm(), 1e-13 * a.double_layer.norm());
}

TEST(Coloring, NoSharedVerticesWithinAColour) {
  const SurfaceMesh& mesh = sphere2();
  const auto colours = color_elements(mesh);
  std::set<int> seen;
  for (const auto& colour : colours) {
    std::set<int> nodes;
    for (int e : colour) {
      EXPECT_TRUE(seen.insert(e).second);
      for (int v : mesh.face(e)) EXPECT_TRUE(nodes.insert(v).second);
    }
  }
  EXPECT_EQ(static_cast<int>(seen.size()), mesh.num_elements());
}

TEST(DoubleLayerPotential, ConstantDensityIdentity) {
  const SurfaceMesh& mesh = sphere2();
  for (const Vec3& x : {Vec3(0, 0, 0), Vec3(0.3, -0.5, 0.6), Vec3(0, 0, 0.9)}) {
    EXPECT_LT((double_layer_constant(mesh, x) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-4);
  }
  for (const Vec3& x : {Vec3(2, 0, 0), Vec3(0.8, 0.8, 0.2), Vec3(0, 0, 1.1)}) {
    EXPECT_LT(double_layer_constant(mesh, x).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(MixedConditions, SplitByPlaneAndValidation) {
  const SurfaceMesh& mesh = sphere2();
  const MixedBC bc = MixedBC::split_by_plane(
      mesh, DomainKind::interior, [&](int a) { return mesh.vertex(a); }, [](int) { return Vec3(1, 2, 3); });
  ASSERT_EQ(static_cast<int>(bc.nodes.size()), mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    const bool upper = mesh.vertex(a).z() >= 0.0;
    EXPECT_EQ(bc.nodes[a].kind == NodeCondition::Kind::velocity, upper);
    EXPECT_EQ(bc.nodes[a].value, upper ? mesh.vertex(a) : Vec3(1, 2, 3));
  }
  EXPECT_NO_THROW(bc.validate(mesh.num_nodes()));
  EXPECT_THROW(bc.validate(mesh.num_nodes() + 1), std::invalid_argument);
  MixedBC bad = bc;
  bad.nodes[4].value.x() = std::nan("");
  EXPECT_THROW(bad.validate(mesh.num_nodes()), std::invalid_argument);
}

TEST(MixedSolve, PrescribedValuesReproducedExactly) {
  const SurfaceMesh& mesh = sphere2();
  const Vec3 src(-2, 0, 0);
  const MixedBC bc = MixedBC::split_by_plane(
      mesh, DomainKind::interior, [&](int a) { return kernels::point_source_velocity(mesh.vertex(a), src, 1.0, 0); },
      [&](int a) { return kernels::point_source_traction(mesh.vertex(a), src, mesh.node_normals()[a], 0); });
  const BoundarySolution sol = solve_mixed(operators2(), bc);
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    if (bc.nodes[a].kind == NodeCondition::Kind::velocity) {
      EXPECT_EQ(sol.velocity[a], bc.nodes[a].value);
      EXPECT_TRUE(sol.velocity_prescribed[a]);
    } else {
      EXPECT_EQ(sol.traction[a], bc.nodes[a].value);
    }
  }
  EXPECT_GT(sol.reciprocal_condition, 0.0);
}

TEST(MixedSolve, RigidVelocityGivesZeroTractionAndConstantInterior) {
  const SurfaceMesh& mesh = sphere2();
  const Vec3 c(0.4, -0.1, 0.25);
  MixedBC bc;
  bc.domain = DomainKind::interior;
  bc.nodes.assign(mesh.num_nodes(), NodeCondition{NodeCondition::Kind::velocity, c});
  const BoundarySolution sol = solve_mixed(operators2(), bc);
  const NodalField zero(mesh.num_nodes(), Vec3::Zero());
  EXPECT_LT(mean_square_error(sol.traction, zero).maxCoeff(), 1e-3);
  for (const Vec3& x : {Vec3(0, 0, 0), Vec3(0.2, 0.4, -0.3)}) {
    EXPECT_LT((interior_velocity(mesh, sol, x) - c).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(MixedSolve, PointSourceInteriorValueMatchesStokeslet) {
  const SurfaceMesh& mesh = sphere2();
  const Vec3 src(-2, 0, 0);
  NodalField u_exact(mesh.num_nodes()), tau_exact(mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    u_exact[a] = kernels::point_source_velocity(mesh.vertex(a), src, 1.0, 0);
    tau_exact[a] = kernels::point_source_traction(mesh.vertex(a), src, mesh.node_normals()[a], 0);
  }
  const MixedBC bc = MixedBC::split_by_plane(
      mesh, DomainKind::interior, [&](int a) { return u_exact[a]; }, [&](int a) { return tau_exact[a]; });
  const BoundarySolution sol = solve_mixed(operators2(), bc);
  const double boundary_error = mean_square_error(sol.velocity, u_exact).maxCoeff();
  EXPECT_LT(boundary_error, 1e-3);
  const Vec3 center = interior_velocity(mesh, sol, Vec3::Zero());
  const Vec3 exact = kernels::point_source_velocity(Vec3::Zero(), src, 1.0, 0);
  EXPECT_LT((center - exact).cwiseAbs().maxCoeff(), 5.0 * boundary_error);
  // Outside the fluid the representation tends to zero.
  EXPECT_LT(boundary_representation(mesh, sol, Vec3(0, 0, 1.5)).norm(), 5.0 * boundary_error);
  EXPECT_THROW(interior_velocity(mesh, sol, mesh.vertex(3)), std::invalid_argument);
}

TEST(MixedSolve, ExteriorErrorsDecayUnderRefinement) {
  const Vec3 src(0, 0.7, 0);
  double previous = 0.0;
  for (int s : {1, 2}) {
    const SurfaceMesh mesh = make_icosphere(s);
    auto ops = std::make_shared<const BoundaryOperators>(assemble_operators(mesh, 1.0));
    NodalField u_exact(mesh.num_nodes()), tau_exact(mesh.num_nodes());
    for (int a = 0; a < mesh.num_nodes(); ++a) {
      u_exact[a] = kernels::point_source_velocity(mesh.vertex(a), src, 1.0, 0);
      // Traction with the normal pointing out of the fluid, i.e. into the sphere.
      tau_exact[a] = kernels::point_source_traction(mesh.vertex(a), src, -mesh.node_normals()[a], 0);
    }
    const MixedBC bc = MixedBC::split_by_plane(
        mesh, DomainKind::exterior, [&](int a) { return u_exact[a]; }, [&](int a) { return tau_exact[a]; });
    const double err = mean_square_error(solve_mixed(ops, bc).velocity, u_exact).maxCoeff();
    if (s > 1) {
      EXPECT_GT(previous / err, 1.8);
    }
    previous = err;
  }
}

TEST(MixedSolve, PureTractionInteriorProblemIsSingular) {
  const SurfaceMesh mesh = make_icosphere(1);
  auto ops = std::make_shared<const BoundaryOperators>(assemble_operators(mesh, 1.0));
  MixedBC bc;
  bc.domain = DomainKind::interior;
  bc.nodes.assign(mesh.num_nodes(), NodeCondition{NodeCondition::Kind::traction, Vec3::Zero()});
  EXPECT_THROW(solve_mixed(ops, bc), NumericalError);
}

}  // namespace
}  // namespace stokes_bie
