#ifndef STOKES_BIE_GALERKIN_HPP
#define STOKES_BIE_GALERKIN_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

#include "stokes_bie/mesh.hpp"
#include "stokes_bie/quadrature.hpp"
#include "stokes_bie/types.hpp"

namespace stokes_bie {

struct AssemblyOptions {
  PairQuadratureOptions pair;
  PointQuadratureOptions point;
};

/// Galerkin boundary operators on linear elements. Nodal unknowns are ordered
/// node-major: degree of freedom 3 * a + k is component k at node a.
///
/// `double_layer` is the principal-value operator
///   A[a, b]_{ki} = int int psi_a(P) psi_b(Q) (3 / 4 pi) R_k R_i (R.n_Q) / r^5
/// built with the mesh normals (R = Q - P). Its diagonal node blocks are reset
/// so that A 1 = (1/2) M 1; `double_layer_raw` keeps the quadrature values.
struct BoundaryOperators {
  double mu = 1.0;
  Eigen::MatrixXd single_layer;      // int int psi_a psi_b U
  Eigen::MatrixXd double_layer;      // regularized
  Eigen::MatrixXd double_layer_raw;  // as assembled
  Eigen::SparseMatrix<double> mass;  // scalar N x N
  Eigen::VectorXd lumped_mass;       // row sums of `mass`

  int num_nodes() const { return static_cast<int>(lumped_mass.size()); }

  /// Matrix multiplying nodal velocity in the limit equation taken from
  /// outside the fluid: sign * A - (1/2) M, sign = +1 for an interior fluid.
  Eigen::MatrixXd exterior_limit(DomainKind domain) const;
  /// Same from inside the fluid: sign * A + (1/2) M.
  Eigen::MatrixXd interior_limit(DomainKind domain) const;
};

/// +1 when the mesh normals point out of the fluid, -1 otherwise.
inline double fluid_sign(DomainKind domain) { return domain == DomainKind::interior ? 1.0 : -1.0; }

/// Assembles single- and double-layer Galerkin matrices. Element rows are
/// processed in colour classes so that concurrent rows never share a node,
/// which keeps the summation order independent of the thread count.
BoundaryOperators assemble_operators(const SurfaceMesh& mesh, double mu, const AssemblyOptions& options = {});

/// M (x) I_3 as a dense 3N x 3N matrix.
Eigen::MatrixXd expanded_mass(const Eigen::SparseMatrix<double>& mass);

/// Greedy element colouring: no two elements of one colour share a vertex.
std::vector<std::vector<int>> color_elements(const SurfaceMesh& mesh);

struct NodeCondition {
  enum class Kind { velocity, traction };
  Kind kind = Kind::velocity;
  Vec3 value = Vec3::Zero();
};

/// Whole-node mixed boundary data. Tractions are sigma . n with n pointing
/// out of the fluid.
struct MixedBC {
  DomainKind domain = DomainKind::interior;
  std::vector<NodeCondition> nodes;

  void validate(int num_nodes) const;

  /// Velocity where x[axis] >= threshold (nodes on the plane included),
  /// traction elsewhere. `velocity(a)` and `traction(a)` give node data.
  static MixedBC split_by_plane(const SurfaceMesh& mesh, DomainKind domain,
                                const std::function<Vec3(int)>& velocity,
                                const std::function<Vec3(int)>& traction, int axis = 2, double threshold = 0.0);
};

struct BoundarySolution {
  DomainKind domain = DomainKind::interior;
  NodalField velocity;
  NodalField traction;
  std::vector<bool> velocity_prescribed;
  std::shared_ptr<const BoundaryOperators> operators;
  double reciprocal_condition = 0.0;
};

/// Solves  K u + V tau = b  with K the exterior-limit matrix and b the
/// Galerkin-tested volume potential (empty for the homogeneous problem).
/// Throws NumericalError with the condition estimate on a singular system.
BoundarySolution solve_mixed(std::shared_ptr<const BoundaryOperators> operators, const MixedBC& bc,
                             const Eigen::VectorXd& volume_rhs = {});

/// Boundary part of the representation at an off-surface point X:
///   sign * D[u](X) + S[tau](X),  D[u]_k = int (3 / 4 pi) R_k (R.u)(R.n) / r^5.
/// Returns the value inside the fluid; outside it tends to zero.
Vec3 boundary_representation(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                             const PointQuadratureOptions& options = {});

/// Velocity at a point of the fluid: boundary representation minus the
/// volume potential value `volume_potential` = int_Omega U F.
/// Throws std::invalid_argument for points within 1e-6 of the surface.
Vec3 interior_velocity(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                       const Vec3& volume_potential = Vec3::Zero(), const PointQuadratureOptions& options = {});

/// Raw double-layer row sums normalised by the lumped mass, per node:
/// (A 1)_a / m_a + s I with s = +1/2 (limit from inside) or -1/2 (outside).
/// Entries should be I and 0 respectively.
std::vector<Mat3> double_layer_row_identity(const BoundaryOperators& ops, double free_term);

/// Double-layer potential of the constant density at X with the mesh normals:
/// int (3 / 4 pi) R R^T (R.n) / r^5 dQ. Equals I inside and 0 outside.
Mat3 double_layer_constant(const SurfaceMesh& mesh, const Vec3& point, const PointQuadratureOptions& options = {});

}  // namespace stokes_bie

#endif  // STOKES_BIE_GALERKIN_HPP
