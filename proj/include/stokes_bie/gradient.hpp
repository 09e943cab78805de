#ifndef STOKES_BIE_GRADIENT_HPP
#define STOKES_BIE_GRADIENT_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <vector>

#include "stokes_bie/galerkin.hpp"
#include "stokes_bie/mesh.hpp"

namespace stokes_bie {

struct GradientOptions {
  /// Offsets as multiples of min(mean edge length, distance from the outer
  /// point to the element boundary), decreasing.
  std::vector<double> eps_schedule{0.5, 0.25, 0.125};
  /// Polynomial extrapolation to zero in eps^power.
  int richardson_power = 1;
  /// Triangle rule degree for the outer (test-function) integral.
  int outer_degree = 5;
  /// Integrate only over elements sharing a vertex with the test element;
  /// the rest is continuous across the surface and cancels in the limit.
  bool local_only = true;
  /// Relative extrapolation residual above which the run fails.
  double residual_tolerance = 0.5;
  PointQuadratureOptions point{.degree = 5, .near_factor = 2.0, .abs_tol = 1e-9, .rel_tol = 1e-7, .max_depth = 30,
                               .throw_on_failure = true};
  /// Optional body force: adds the explicit volume-derivative term
  /// -int_Omega U_{kj,m}(Q, X) F_j(Q) dQ at each offset point.
  std::function<Vec3(const Vec3&)> volume_force;
  int volume_line_points = 8;
};

/// Galerkin right-hand sides for the nine gradient components; entry 3 k + m
/// holds int psi_a(P) du_k/dx_m(P) dP for every node a.
struct GradientRhs {
  std::array<Eigen::VectorXd, 9> rhs;
  /// Largest |full extrapolation - extrapolation without the coarsest offset|
  /// relative to the largest extrapolated magnitude, over outer points.
  double extrapolation_residual = 0.0;
};

/// Limit difference of the differentiated representation,
///   G(P - eps n) - G(P + eps n),  n pointing out of the fluid, where
///   G_km(X) = int [ U_kj,m tau_j - T_ijk,m u_i n_j ](Q, X) dQ
/// is extrapolated to eps = 0 and tested against the nodal basis.
GradientRhs limit_difference_rhs(const SurfaceMesh& mesh, const BoundarySolution& solution,
                                 const GradientOptions& options = {});

/// Nodal gradients u_{k,m}, stored as (k, m) matrices per node.
struct GradientField {
  std::vector<Mat3> values;

  /// Component (k, m) across nodes.
  std::vector<double> component(int k, int m) const;
};

/// Nine mass-matrix solves sharing one sparse Cholesky factorization.
GradientField solve_gradients(const Eigen::SparseMatrix<double>& mass, const GradientRhs& rhs);

/// Trace u_{k,k} at every node.
std::vector<double> divergence(const GradientField& field);

/// G_km(X) from the boundary data over the listed elements (all when empty).
Mat3 representation_gradient(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                             const std::vector<int>& elements = {}, const PointQuadratureOptions& options = {});

/// -int_Omega U_{kj,m}(Q, X) F_j(Q) dQ by cones from X over every face;
/// valid on either side of the surface.
Mat3 volume_gradient_term(const SurfaceMesh& mesh, const std::function<Vec3(const Vec3&)>& force, double mu,
                          const Vec3& point, int line_points = 8, const PointQuadratureOptions& options = {});

}  // namespace stokes_bie

#endif  // STOKES_BIE_GRADIENT_HPP
