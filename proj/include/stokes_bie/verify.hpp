#ifndef STOKES_BIE_VERIFY_HPP
#define STOKES_BIE_VERIFY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stokes_bie/galerkin.hpp"
#include "stokes_bie/gradient.hpp"
#include "stokes_bie/mesh.hpp"
#include "stokes_bie/volumegrid.hpp"

namespace stokes_bie {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  /// NaN residuals fail.
  bool passed() const { return residual <= tolerance; }
};

/// An error table with the settings that produced it, in insertion order.
struct TableRun {
  ErrorTable table;
  std::vector<std::pair<std::string, std::string>> settings;

  void set(std::string key, std::string value) { settings.emplace_back(std::move(key), std::move(value)); }
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  std::vector<TableRun> tables;

  bool all_passed() const;
  void merge(VerificationReport other);
};

struct IdentityCheckOptions {
  int samples = 100;
  std::vector<double> viscosities{0.5, 1.0, 2.0};
  double r_min = 0.1;
  double r_max = 10.0;
  /// Central-difference step as a fraction of the pair distance.
  double step_factor = 1e-4;
  double tolerance = 1e-5;
  /// Divergence bound relative to the Stokeslet norm.
  double divergence_tolerance = 1e-6;
  std::uint64_t seed = 12345;
  /// Multiplies H inside the checks; any value other than 1 must fail them.
  double h_scale = 1.0;
};

/// mu Lap H = U and div H = 0 at seeded random pairs (finite differences).
VerificationReport check_h_identities_3d(const IdentityCheckOptions& options = {});
/// Lap H2 = U2 and div H2 = 0 for the planar kernels (viscosities unused).
VerificationReport check_h_identities_2d(const IdentityCheckOptions& options = {});
/// P-derivative kernels, the normal derivative of H, the H stress and the
/// point-source traction against finite differences of their base fields.
VerificationReport check_kernel_derivatives(const IdentityCheckOptions& options = {});

/// All three suites.
VerificationReport run_identity_suite(const IdentityCheckOptions& options = {});

/// Published comparison meshes: 376 and 1504 elements.
enum class ReferenceMesh { coarse, fine };

/// Reference mesh for an element count within 25% of 376 or 1504.
std::optional<ReferenceMesh> comparable_reference_mesh(int num_elements);

struct HomogeneousProblem {
  DomainKind domain = DomainKind::interior;
  Vec3 source{-2.0, 0.0, 0.0};
  double mu = 1.0;
  AssemblyOptions assembly;
};

/// Mixed problem (velocity on z >= 0, traction below) with data from the
/// first Stokeslet column; rows u and tau, components x, y, z.
TableRun run_homogeneous_test(const SurfaceMesh& mesh, const HomogeneousProblem& problem);

struct NonhomogeneousProblem {
  /// Body force is the first Stokeslet column centred here; exact solution H.
  Vec3 source{2.0, 0.0, 0.0};
  double mu = 1.0;
  double box_half_width = 1.1;
  int grid_cells = 40;
  std::uint64_t seed = 12345;
  AssemblyOptions assembly;
  RemainderOptions remainder;
};

TableRun run_nonhomogeneous_test(const SurfaceMesh& mesh, const NonhomogeneousProblem& problem);

/// Relative norm difference between the split volume right-hand side (H
/// boundary terms plus grid remainder) and midpoint quadrature of the full
/// force on a brute_cells^3 grid over the same box.
CheckResult check_volume_split(const SurfaceMesh& mesh, const NonhomogeneousProblem& problem, int brute_cells = 60,
                               double tolerance = 0.02);

/// Constant-density double layer: the assembled row sums (limits from inside
/// and outside) and the potential at the given points, against I and 0.
VerificationReport check_double_layer_identity(const SurfaceMesh& mesh, std::span<const Vec3> inside_points,
                                               std::span<const Vec3> outside_points, double tolerance,
                                               const AssemblyOptions& assembly = {});

/// (a) interior source (2,0,0); (b) exterior source (0,0.7,0);
/// (c) nonhomogeneous interior with H centred at (0,0,1.2).
enum class GradientProblem { a, b, c };

std::string to_string(GradientProblem problem);
/// Throws std::invalid_argument for anything but "a", "b", "c".
GradientProblem parse_gradient_problem(const std::string& text);

struct GradientTestOptions {
  double mu = 1.0;
  int grid_cells = 40;
  double box_half_width = 1.1;
  std::uint64_t seed = 12345;
  AssemblyOptions assembly;
  GradientOptions gradient;
};

struct GradientTestResult {
  TableRun run;
  BoundarySolution solution;
  GradientField gradients;
  /// Body force of problem (c); empty otherwise.
  ForceField force;
  /// Mean square of the nodal trace u_{k,k}.
  double divergence_error = 0.0;
  double extrapolation_residual = 0.0;
};

/// Nine rows "grad_u", "u<k>,<m>" compared with the exact derivatives.
GradientTestResult run_gradient_test(const SurfaceMesh& mesh, GradientProblem problem,
                                     const GradientTestOptions& options = {});

/// Largest mean-square nodal change between two gradient fields over the
/// nine components.
double gradient_difference(const GradientField& first, const GradientField& second);

}  // namespace stokes_bie

#endif  // STOKES_BIE_VERIFY_HPP
