#include <gtest/gtest.h>

#include <omp.h>

#include <filesystem>
#include <fstream>

#include "stokes_bie/kernels.hpp"
#include "stokes_bie/volumegrid.hpp"

namespace stokes_bie {
namespace {

struct Sphere {
  SurfaceMesh mesh;
  LaplaceOperators laplace;
};

const Sphere& setup(int s) {
  static const Sphere cache[] = {{make_icosphere(1), assemble_laplace_operators(make_icosphere(1))},
                                {make_icosphere(2), assemble_laplace_operators(make_icosphere(2))}};
  return cache[s - 1];
}

HarmonicExtension extension_of(const Sphere& st, const ForceField& force) {
  Eigen::MatrixXd dirichlet(st.mesh.num_nodes(), 3);
  for (int a = 0; a < st.mesh.num_nodes(); ++a) dirichlet.row(a) = force(st.mesh.vertex(a)).transpose();
  return HarmonicExtension(st.mesh, st.laplace, dirichlet);
}

double max_inside(const GridField& field) {
  double worst = 0.0;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (field.inside[i]) worst = std::max(worst, field.values[i].cwiseAbs().maxCoeff());
  }
  return worst;
}

TEST(Grid, SpacingAndCounts) {
  const CoveringGrid grid = build_grid(1.1, 40);
  for (int axis = 0; axis < 3; ++axis) EXPECT_NEAR(grid.spacing()[axis], 0.055, 1e-15);
  EXPECT_EQ(grid.num_vertices(), 41 * 41 * 41);
  EXPECT_EQ(build_grid(1.0, 1).num_vertices(), 8);
  const CoveringGrid box = build_grid(Vec3(-1, -2, 0), Vec3(1, 2, 3), {2, 3, 4});
  for (int index = 0; index < box.num_vertices(); ++index) {
    const auto ijk = box.ijk(index);
    EXPECT_EQ(box.index(ijk[0], ijk[1], ijk[2]), index);
  }
  EXPECT_LT((box.vertex(box.index(2, 3, 4)) - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(Grid, TrapezoidWeightsSumToBoxVolume) {
  const CoveringGrid grid = build_grid(Vec3(-1, 0, 0), Vec3(2, 1, 0.5), {6, 5, 4});
  double sum = 0.0;
  for (int i = 0; i < grid.num_vertices(); ++i) sum += grid.vertex_weight(i);
  EXPECT_NEAR(sum, 3.0 * 1.0 * 0.5, 1e-13);
}

TEST(Grid, InvalidBoxesRejected) {
  EXPECT_THROW(build_grid(1.0, 0), std::invalid_argument);
  EXPECT_THROW(build_grid(-1.0, 4), std::invalid_argument);
  EXPECT_THROW(build_grid(Vec3(0, 0, 0), Vec3(1, 0, 1), {1, 1, 1}), std::invalid_argument);
  const SurfaceMesh& mesh = setup(1).mesh;
  EXPECT_NO_THROW(require_contains(build_grid(1.1, 4), mesh));
  EXPECT_THROW(require_contains(build_grid(0.9, 4), mesh), std::invalid_argument);
  EXPECT_THROW(require_contains(build_grid(1.0, 4), mesh), std::invalid_argument);  // touching is not strict
}

TEST(Classification, SimplePoints) {
  const SurfaceMesh& mesh = setup(2).mesh;
  EXPECT_TRUE(point_inside(mesh, Vec3::Zero()));
  EXPECT_FALSE(point_inside(mesh, Vec3(1.05, 0, 0)));
  EXPECT_FALSE(point_inside(mesh, Vec3(3, 3, 3)));
}

TEST(Classification, AgreesWithAnalyticSphereAwayFromSurface) {
  const SurfaceMesh& mesh = setup(2).mesh;
  const CoveringGrid grid = build_grid(1.1, 40);
  const auto inside = classify_vertices(grid, mesh);
  const double band = mesh.mean_edge_length();
  int mismatches = 0;
  for (int i = 0; i < grid.num_vertices(); ++i) {
    const double r = grid.vertex(i).norm();
    if (static_cast<bool>(inside[i]) != (r < 1.0)) {
      ++mismatches;
      EXPECT_LE(std::abs(r - 1.0), band);
    }
  }
  EXPECT_GT(mismatches, 0);  // the facets are inscribed, so some do differ
  EXPECT_EQ(inside, classify_vertices(grid, mesh, 999));
}

TEST(RemainderField, ConstantForceVanishes) {
  const Sphere& st = setup(2);
  const Vec3 c(0.5, -1.0, 2.0);
  const ForceField force = [c](const Vec3&) { return c; };
  const CoveringGrid grid = build_grid(1.1, 20);
  const auto inside = classify_vertices(grid, st.mesh);
  const GridField field = remainder_field(grid, inside, force, extension_of(st, force));
  EXPECT_LT(max_inside(field), 1e-3 * c.norm());
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!field.inside[i]) {
      EXPECT_EQ(field.values[i], Vec3::Zero());
    }
  }
}

TEST(RemainderField, AffineForceReproducedAndConverges) {
  const ForceField force = [](const Vec3& q) { return Vec3(1.0 + q.x(), 2.0 * q.y() - q.z(), 0.5 * q.x() + q.z()); };
  const CoveringGrid grid = build_grid(1.1, 20);
  double previous = 0.0;
  for (int s : {1, 2}) {
    const Sphere& st = setup(s);
    const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, extension_of(st, force));
    const double err = max_inside(field);
    if (s == 2) {
      EXPECT_LT(err, 1e-2 * 2.0);  // |F| is about 2 on the sphere
      EXPECT_GT(previous / err, 1.8);
    }
    previous = err;
  }
}

TEST(RemainderField, StokesletForceIsNonzeroInsideAndZeroOutside) {
  const Sphere& st = setup(2);
  const Vec3 source(2, 0, 0);
  const ForceField force = [source](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, 1.0).col(0)); };
  const CoveringGrid grid = build_grid(1.1, 20);
  const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, extension_of(st, force));
  EXPECT_GT(max_inside(field), 0.0);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    EXPECT_TRUE(field.values[i].allFinite());
    if (!field.inside[i]) {
      EXPECT_EQ(field.values[i], Vec3::Zero());
    }
  }
}

TEST(RemainderRhs, ZeroFieldGivesZeroVector) {
  const Sphere& st = setup(1);
  GridField field;
  field.grid = build_grid(1.1, 6);
  field.inside = classify_vertices(field.grid, st.mesh);
  field.values.assign(field.grid.num_vertices(), Vec3::Zero());
  RemainderOptions visit_all;
  visit_all.skip_zero_vertices = false;
  EXPECT_EQ(remainder_volume_rhs(st.mesh, field, 1.0, visit_all).norm(), 0.0);
}

TEST(RemainderRhs, IndependentOfThreadCount) {
  const Sphere& st = setup(1);
  const Vec3 source(2, 0, 0);
  const ForceField force = [source](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, 1.0).col(0)); };
  const CoveringGrid grid = build_grid(1.1, 8);
  const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, extension_of(st, force));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Eigen::VectorXd one = remainder_volume_rhs(st.mesh, field, 1.0);
  omp_set_num_threads(3);
  const Eigen::VectorXd three = remainder_volume_rhs(st.mesh, field, 1.0);
  omp_set_num_threads(saved);
  EXPECT_EQ((one - three).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RemainderRhs, SkippingZeroVerticesIsExact) {
  const Sphere& st = setup(1);
  const Vec3 source(2, 0, 0);
  const ForceField force = [source](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, 1.0).col(0)); };
  const CoveringGrid grid = build_grid(1.1, 8);
  const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, extension_of(st, force));
  RemainderOptions visit_all;
  visit_all.skip_zero_vertices = false;
  const Eigen::VectorXd skipped = remainder_volume_rhs(st.mesh, field, 1.0);
  const Eigen::VectorXd visited = remainder_volume_rhs(st.mesh, field, 1.0, visit_all);
  EXPECT_GT(skipped.norm(), 0.0);
  EXPECT_EQ((skipped - visited).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HBoundaryRhs, ZeroDataGivesZeroVector) {
  const Sphere& st = setup(1);
  const HOperators h_ops = assemble_h_operators(st.mesh, 1.0);
  const HarmonicExtension ext(st.mesh, st.laplace, Eigen::MatrixXd::Zero(st.mesh.num_nodes(), 3));
  EXPECT_EQ(h_boundary_rhs(h_ops, ext).norm(), 0.0);
}

TEST(HBoundaryRhs, ConstantForceMatchesBruteForceVolumeQuadrature) {
  const Sphere& st = setup(2);
  const Vec3 c(0.3, -0.8, 0.5);
  const ForceField force = [c](const Vec3&) { return c; };
  const HOperators h_ops = assemble_h_operators(st.mesh, 1.0);
  const Eigen::VectorXd split = h_boundary_rhs(h_ops, extension_of(st, force));
  const Eigen::VectorXd brute = brute_force_volume_rhs(st.mesh, force, 1.0, build_grid(1.1, 60));
  EXPECT_LT((split - brute).norm() / brute.norm(), 0.01);
}

TEST(VolumeSplit, GridRefinementChangesRhsLittle) {
  const Sphere& st = setup(1);
  const Vec3 source(2, 0, 0);
  const ForceField force = [source](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, 1.0).col(0)); };
  const HarmonicExtension ext = extension_of(st, force);
  const HOperators h_ops = assemble_h_operators(st.mesh, 1.0);
  const Eigen::VectorXd boundary = h_boundary_rhs(h_ops, ext);
  Eigen::VectorXd totals[2];
  int slot = 0;
  for (int cells : {20, 40}) {
    const CoveringGrid grid = build_grid(1.1, cells);
    const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, ext);
    totals[slot++] = boundary + remainder_volume_rhs(st.mesh, field, 1.0);
  }
  EXPECT_LT((totals[0] - totals[1]).norm() / totals[1].norm(), 0.02);
}

TEST(VolumeSplit, InteriorVelocityMatchesHField) {
  const Sphere& st = setup(2);
  const Vec3 source(0, 0, 1.2);
  const ForceField force = [source](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, 1.0).col(0)); };
  const HarmonicExtension ext = extension_of(st, force);
  const HOperators h_ops = assemble_h_operators(st.mesh, 1.0);
  const CoveringGrid grid = build_grid(1.1, 20);
  const GridField field = remainder_field(grid, classify_vertices(grid, st.mesh), force, ext);
  const Eigen::VectorXd rhs = h_boundary_rhs(h_ops, ext) + remainder_volume_rhs(st.mesh, field, 1.0);

  NodalField u_exact(st.mesh.num_nodes()), tau_exact(st.mesh.num_nodes());
  for (int a = 0; a < st.mesh.num_nodes(); ++a) {
    u_exact[a] = kernels::h_velocity(st.mesh.vertex(a), source, 1.0, 0);
    tau_exact[a] = kernels::h_traction(st.mesh.vertex(a), source, st.mesh.node_normals()[a], 1.0, 0);
  }
  auto ops = std::make_shared<const BoundaryOperators>(assemble_operators(st.mesh, 1.0));
  const MixedBC bc = MixedBC::split_by_plane(
      st.mesh, DomainKind::interior, [&](int a) { return u_exact[a]; }, [&](int a) { return tau_exact[a]; });
  const BoundarySolution sol = solve_mixed(ops, bc, rhs);
  const double boundary_error = mean_square_error(sol.velocity, u_exact).maxCoeff();
  EXPECT_LT(boundary_error, 1e-3);
  for (const Vec3& x : {Vec3(0.1, -0.2, 0.3), Vec3(-0.4, 0.2, -0.1)}) {
    const Vec3 potential = volume_potential_at(st.mesh, ext, 0, field, x, 1.0);
    const Vec3 u = interior_velocity(st.mesh, sol, x, potential);
    EXPECT_LT((u - kernels::h_velocity(x, source, 1.0, 0)).cwiseAbs().maxCoeff(), 5.0 * boundary_error);
  }
}

TEST(GridFieldCsv, OneRowPerVertex) {
  const Sphere& st = setup(1);
  GridField field;
  field.grid = build_grid(1.1, 3);
  field.inside = classify_vertices(field.grid, st.mesh);
  field.values.assign(field.grid.num_vertices(), Vec3(1, 2, 3));
  const auto path = std::filesystem::temp_directory_path() / "stokes_bie_test_grid.csv";
  write_grid_field_csv(field, path);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "i,j,k,inside,f_x,f_y,f_z");
  while (std::getline(in, line)) ++rows;
  std::filesystem::remove(path);
  EXPECT_EQ(rows, 64);
}

}  // namespace
}  // namespace stokes_bie
