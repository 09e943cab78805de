#include "stokes_bie/harmonic.hpp"

#include <exception>
#include <numbers>
#include <sstream>

namespace stokes_bie {

namespace {

constexpr double kInvFourPi = 1.0 / (4.0 * std::numbers::pi);

/// (G, dG) with G = 1 / (4 pi r), dG = (n.R) / (4 pi r^3), R = Q - P.
Vec2 laplace_pair(const Vec3& R, const Vec3& n) {
  const double r = R.norm();
  const double g = kInvFourPi / r;
  return {g, g * R.dot(n) / (r * r)};
}

}  // namespace

LaplaceOperators assemble_laplace_operators(const SurfaceMesh& mesh, const AssemblyOptions& options) {
  const int n = mesh.num_nodes();
  const int ne = mesh.num_elements();
  LaplaceOperators ops;
  ops.single_layer = Eigen::MatrixXd::Zero(n, n);
  ops.double_layer_raw = Eigen::MatrixXd::Zero(n, n);
  ops.mass = mass_matrix(mesh);

  std::exception_ptr failure;
  for (const auto& color : color_elements(mesh)) {
    const int count = static_cast<int>(color.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int idx = 0; idx < count; ++idx) {
      const int ep = color[idx];
      const auto& face_p = mesh.face(ep);
      for (int eq = 0; eq < ne; ++eq) {
        const auto& face_q = mesh.face(eq);
        const Vec3 nq = mesh.element(eq).normal;
        try {
          const auto block = galerkin_pair_integral(
              mesh.element(ep), mesh.element(eq), classify_pair(face_p, face_q),
              [nq](const Vec3& P, const Vec3& Q) -> Vec2 { return laplace_pair(Q - P, nq); }, options.pair,
              options.point);
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              ops.single_layer(face_p[a], face_q[b]) += block[a][b][0];
              // Exactly zero on a flat coincident pair; the quadrature sees round-off only.
              if (ep != eq) ops.double_layer_raw(face_p[a], face_q[b]) += block[a][b][1];
            }
          }
        } catch (const std::exception& err) {
#pragma omp critical(stokes_bie_laplace_failure)
          if (!failure) {
            std::ostringstream msg;
            msg << "Laplace element pair (" << ep << ", " << eq << "): " << err.what();
            failure = std::make_exception_ptr(NumericalError(msg.str()));
          }
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  const Eigen::VectorXd lumped = ops.mass * Eigen::VectorXd::Ones(n);
  ops.double_layer = ops.double_layer_raw;
  for (int a = 0; a < n; ++a) {
    ops.double_layer(a, a) = 0.5 * lumped[a] - (ops.double_layer_raw.row(a).sum() - ops.double_layer_raw(a, a));
  }
  return ops;
}

Eigen::MatrixXd solve_flux(const LaplaceOperators& ops, const Eigen::MatrixXd& dirichlet) {
  const Eigen::Index n = ops.single_layer.rows();
  if (dirichlet.rows() != n) {
    throw std::invalid_argument("solve_flux: Dirichlet data has " + std::to_string(dirichlet.rows()) +
                                " rows, expected " + std::to_string(n));
  }
  const Eigen::MatrixXd sym = 0.5 * (ops.single_layer + ops.single_layer.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) throw NumericalError("Laplace single-layer matrix is not positive definite");
  const Eigen::MatrixXd rhs = 0.5 * (ops.mass * dirichlet) - ops.double_layer * dirichlet;
  return llt.solve(rhs);
}

Eigen::VectorXd solve_flux(const LaplaceOperators& ops, const Eigen::VectorXd& dirichlet) {
  return solve_flux(ops, Eigen::MatrixXd(dirichlet)).col(0);
}

HarmonicExtension::HarmonicExtension(SurfaceMesh mesh, const LaplaceOperators& ops, Eigen::MatrixXd dirichlet)
    : mesh_(std::move(mesh)), dirichlet_(std::move(dirichlet)) {
  flux_ = solve_flux(ops, dirichlet_);
}

Eigen::MatrixXd HarmonicExtension::interior_values(std::span<const Vec3> points,
                                                   const PointQuadratureOptions& options) const {
  const int np = static_cast<int>(points.size());
  const int m = num_fields();
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(np, m);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < np; ++i) {
    try {
      const Vec3 X = points[i];
      if (distance_to_surface(mesh_, X) < 1e-6) {
        throw std::invalid_argument("harmonic interior evaluation within 1e-6 of the surface");
      }
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
      for (int e = 0; e < mesh_.num_elements(); ++e) {
        const Vec3 n = mesh_.element(e).normal;
        const auto parts = integrate_point_kernel(
            mesh_.element(e), X, [&](const Vec3& Q) -> Vec2 { return laplace_pair(Q - X, n); }, options);
        const auto& f = mesh_.face(e);
        for (int b = 0; b < 3; ++b) row += parts[b][0] * flux_.row(f[b]) + parts[b][1] * dirichlet_.row(f[b]);
      }
      values.row(i) = row;
    } catch (...) {
#pragma omp critical(stokes_bie_harmonic_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

}  // namespace stokes_bie
