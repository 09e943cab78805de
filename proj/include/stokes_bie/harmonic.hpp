#ifndef STOKES_BIE_HARMONIC_HPP
#define STOKES_BIE_HARMONIC_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>

#include "stokes_bie/galerkin.hpp"
#include "stokes_bie/mesh.hpp"

namespace stokes_bie {

/// Galerkin Laplace operators for the interior Dirichlet problem:
///   single_layer[a, b] = int int psi_a psi_b / (4 pi r)
///   double_layer[a, b] = int int psi_a psi_b (n_Q . R) / (4 pi r^3)
/// with the double-layer diagonal reset so that A 1 = (1/2) M 1.
struct LaplaceOperators {
  Eigen::MatrixXd single_layer;
  Eigen::MatrixXd double_layer;
  Eigen::MatrixXd double_layer_raw;
  Eigen::SparseMatrix<double> mass;
};

LaplaceOperators assemble_laplace_operators(const SurfaceMesh& mesh, const AssemblyOptions& options = {});

/// Interior harmonic extension of nodal boundary data, one column per scalar
/// field. The flux dphi/dn (outward) solves  V q = ((1/2) M - A) phi,
/// all columns sharing one Cholesky factorization of V.
class HarmonicExtension {
 public:
  HarmonicExtension(SurfaceMesh mesh, const LaplaceOperators& ops, Eigen::MatrixXd dirichlet);

  const SurfaceMesh& mesh() const { return mesh_; }
  int num_fields() const { return static_cast<int>(dirichlet_.cols()); }
  const Eigen::MatrixXd& dirichlet() const { return dirichlet_; }
  const Eigen::MatrixXd& flux() const { return flux_; }

  /// Green's representation  phi(X) = int G q + int phi (n.R) / (4 pi r^3)
  /// at interior points; row i holds all fields at points[i]. Throws
  /// std::invalid_argument for a point within 1e-6 of the surface.
  Eigen::MatrixXd interior_values(std::span<const Vec3> points, const PointQuadratureOptions& options = {}) const;

 private:
  SurfaceMesh mesh_;
  Eigen::MatrixXd dirichlet_;
  Eigen::MatrixXd flux_;
};

/// Flux for a single Dirichlet column.
Eigen::VectorXd solve_flux(const LaplaceOperators& ops, const Eigen::VectorXd& dirichlet);

/// Flux for several Dirichlet columns with one factorization.
Eigen::MatrixXd solve_flux(const LaplaceOperators& ops, const Eigen::MatrixXd& dirichlet);

}  // namespace stokes_bie

#endif  // STOKES_BIE_HARMONIC_HPP
