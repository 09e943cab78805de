#ifndef STOKES_BIE_KERNELS_HPP
#define STOKES_BIE_KERNELS_HPP

// Closed-form Stokes and Laplace kernels.
//
// Conventions used throughout:
//   Q is the field (integration) point, P the load point, R = Q - P, r = |R|.
//   Indices are 0-based. Derivative kernels differentiate with respect to the
//   coordinates of P; a derivative in Q is the negation.
//   The public functions reject r == 0 with std::domain_error. Quadrature
//   inner loops use the unchecked `*_r` variants that take R directly.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stokes_bie/types.hpp"

namespace stokes_bie::kernels {

inline constexpr double pi = std::numbers::pi;

namespace detail {
inline double checked_distance(const Vec3& r_vec) {
  const double r = r_vec.norm();
  if (!(r > 0.0)) throw std::domain_error("kernel evaluated at coincident points (r = 0)");
  return r;
}
inline double kd(int a, int b) { return a == b ? 1.0 : 0.0; }
}  // namespace detail

// ---------------------------------------------------------------------------
// Unchecked kernels of R = Q - P.

/// Stokeslet U_kj = (1/(8 pi mu)) [delta_kj / r + R_k R_j / r^3].
inline Mat3 stokeslet_r(const Vec3& R, double mu) {
  const double r = R.norm();
  const double inv_r = 1.0 / r;
  const double c = 1.0 / (8.0 * pi * mu);
  Mat3 u = (c * inv_r * inv_r * inv_r) * (R * R.transpose());
  u.diagonal().array() += c * inv_r;
  return u;
}

/// Stresslet T_ijk = -(3/(4 pi)) R_i R_j R_k / r^5.
inline Tensor3 stresslet_r(const Vec3& R) {
  const double r2 = R.squaredNorm();
  const double c = -3.0 / (4.0 * pi) / (r2 * r2 * std::sqrt(r2));
  Tensor3 t;
  const Mat3 rr = R * R.transpose();
  for (int i = 0; i < 3; ++i) t.slice[i] = (c * R[i]) * rr;
  return t;
}

/// H_kj = (1/(32 pi mu^2)) [3 r delta_kj - R_k R_j / r].
inline Mat3 hfun_r(const Vec3& R, double mu) {
  const double r = R.norm();
  const double c = 1.0 / (32.0 * pi * mu * mu);
  Mat3 h = (-c / r) * (R * R.transpose());
  h.diagonal().array() += 3.0 * c * r;
  return h;
}

/// Normal derivative in Q of H:
/// (1/(32 pi mu^2 r)) [3 (n.R) delta_kj - (n_k R_j + n_j R_k) + (n.R) R_k R_j / r^2].
inline Mat3 hfun_normal_derivative_r(const Vec3& R, const Vec3& n, double mu) {
  const double r = R.norm();
  const double nr = n.dot(R);
  const double c = 1.0 / (32.0 * pi * mu * mu * r);
  Mat3 d = (c * nr / (r * r)) * (R * R.transpose()) - c * (n * R.transpose() + R * n.transpose());
  d.diagonal().array() += 3.0 * c * nr;
  return d;
}

/// U_kj,m: derivative of the Stokeslet with respect to P_m.
inline Mat3 stokeslet_deriv_r(const Vec3& R, double mu, int m) {
  const double r = R.norm();
  const double inv_r3 = 1.0 / (r * r * r);
  const double c = 1.0 / (8.0 * pi * mu);
  Mat3 d = (3.0 * c * R[m] * inv_r3 / (r * r)) * (R * R.transpose());
  d.diagonal().array() += c * R[m] * inv_r3;
  d.row(m) -= c * inv_r3 * R.transpose();
  d.col(m) -= c * inv_r3 * R;
  return d;
}

/// T_kjl,m: derivative of the stresslet with respect to P_m.
inline Tensor3 stresslet_deriv_r(const Vec3& R, int m) {
  const double r2 = R.squaredNorm();
  const double r = std::sqrt(r2);
  const double inv_r5 = 1.0 / (r2 * r2 * r);
  const double c = -3.0 / (4.0 * pi);
  Tensor3 t;
  const Mat3 rr = R * R.transpose();
  for (int k = 0; k < 3; ++k) {
    Mat3& s = t.slice[k];
    s = (5.0 * R[k] * R[m] * inv_r5 / r2) * rr;
    // - delta_km R_j R_l
    if (k == m) s -= inv_r5 * rr;
    // - delta_jm R_k R_l  (row j = m)
    s.row(m) -= inv_r5 * R[k] * R.transpose();
    // - delta_lm R_k R_j  (column l = m)
    s.col(m) -= inv_r5 * R[k] * R;
    s *= c;
  }
  return t;
}

/// H_kj,m: derivative of H with respect to P_m.
inline Mat3 hfun_deriv_r(const Vec3& R, double mu, int m) {
  const double r = R.norm();
  const double c = 1.0 / (32.0 * pi * mu * mu);
  Mat3 d = (-c * R[m] / (r * r * r)) * (R * R.transpose());
  d.diagonal().array() -= 3.0 * c * R[m] / r;
  d.row(m) += (c / r) * R.transpose();
  d.col(m) += (c / r) * R;
  return d;
}

/// Stress of the H velocity field:
/// sigma_kjl = (1/(16 pi mu)) [R_k R_l R_j / r^3 + (R_l delta_kj + R_k delta_jl - R_j delta_kl) / r].
/// Stored as t(k, j, l).
inline Tensor3 h_stress_r(const Vec3& R, double mu) {
  const double r = R.norm();
  const double c = 1.0 / (16.0 * pi * mu);
  Tensor3 s;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      for (int l = 0; l < 3; ++l) {
        s(k, j, l) = c * (R[k] * R[l] * R[j] / (r * r * r) +
                          (R[l] * detail::kd(k, j) + R[k] * detail::kd(j, l) - R[j] * detail::kd(k, l)) / r);
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Checked public API.

inline Mat3 stokeslet(const Vec3& Q, const Vec3& P, double mu) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return stokeslet_r(R, mu);
}

inline Tensor3 stresslet(const Vec3& Q, const Vec3& P) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return stresslet_r(R);
}

inline Mat3 hfun(const Vec3& Q, const Vec3& P, double mu) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return hfun_r(R, mu);
}

inline Mat3 hfun_normal_derivative(const Vec3& Q, const Vec3& P, const Vec3& n, double mu) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return hfun_normal_derivative_r(R, n, mu);
}

inline Mat3 stokeslet_deriv(const Vec3& Q, const Vec3& P, double mu, int m) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return stokeslet_deriv_r(R, mu, m);
}

inline Tensor3 stresslet_deriv(const Vec3& Q, const Vec3& P, int m) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return stresslet_deriv_r(R, m);
}

inline Mat3 hfun_deriv(const Vec3& Q, const Vec3& P, double mu, int m) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return hfun_deriv_r(R, mu, m);
}

/// Velocity of the zero-pressure H solution for column j; equals column j of hfun.
inline Vec3 h_velocity(const Vec3& Q, const Vec3& P, double mu, int j) {
  const Vec3 R = Q - P;
  const double r = detail::checked_distance(R);
  const double c = r / (32.0 * pi * mu * mu);
  Vec3 u = (-c * R[j] / (r * r)) * R;
  u[j] += 3.0 * c;
  return u;
}

inline Tensor3 h_stress(const Vec3& Q, const Vec3& P, double mu) {
  const Vec3 R = Q - P;
  detail::checked_distance(R);
  return h_stress_r(R, mu);
}

/// Traction sigma_kjl n_l of the H solution for column j.
inline Vec3 h_traction(const Vec3& Q, const Vec3& P, const Vec3& n, double mu, int j) {
  const Tensor3 s = h_stress(Q, P, mu);
  Vec3 t;
  for (int k = 0; k < 3; ++k) t[k] = s.slice[k].row(j).dot(n);
  return t;
}

/// Velocity at Q of a unit point force at `source` along axis `column`.
inline Vec3 point_source_velocity(const Vec3& Q, const Vec3& source, double mu, int column) {
  return stokeslet(Q, source, mu).col(column);
}

/// Traction tau_i = T_{i j c}(Q, source) n_j of the same point force.
inline Vec3 point_source_traction(const Vec3& Q, const Vec3& source, const Vec3& n, int column) {
  const Vec3 R = Q - source;
  const double r = detail::checked_distance(R);
  const double r5 = r * r * r * r * r;
  return (-3.0 / (4.0 * pi) * R[column] * R.dot(n) / r5) * R;
}

/// Stokeslet pressure p_c = R_c / (4 pi r^3). Not used by the solver (traction
/// comes from the stresslet); kept for constitutive consistency checks.
inline double stokeslet_pressure(const Vec3& Q, const Vec3& P, int column) {
  const Vec3 R = Q - P;
  const double r = detail::checked_distance(R);
  return R[column] / (4.0 * pi * r * r * r);
}

/// Laplace free-space Green's function 1 / (4 pi r).
inline double laplace_green(const Vec3& Q, const Vec3& P) {
  return 1.0 / (4.0 * pi * detail::checked_distance(Q - P));
}

/// n.R / (4 pi r^3); equals -n . grad_Q (1 / (4 pi r)).
inline double laplace_green_dn(const Vec3& Q, const Vec3& P, const Vec3& n) {
  const Vec3 R = Q - P;
  const double r = detail::checked_distance(R);
  return n.dot(R) / (4.0 * pi * r * r * r);
}

/// Two-dimensional Stokeslet without normalization: -delta_kj log r + R_k R_j / r^2.
inline Mat2 stokeslet_2d(const Vec2& Q, const Vec2& P) {
  const Vec2 R = Q - P;
  const double r2 = R.squaredNorm();
  if (!(r2 > 0.0)) throw std::domain_error("kernel evaluated at coincident points (r = 0)");
  Mat2 u = R * R.transpose() / r2;
  u.diagonal().array() -= 0.5 * std::log(r2);
  return u;
}

/// Two-dimensional H: (1/32) [delta_kj r^2 (17 - 12 log r) + 2 R_k R_j (4 log r - 5)].
inline Mat2 hfun_2d(const Vec2& Q, const Vec2& P) {
  const Vec2 R = Q - P;
  const double r2 = R.squaredNorm();
  if (!(r2 > 0.0)) throw std::domain_error("kernel evaluated at coincident points (r = 0)");
  const double log_r = 0.5 * std::log(r2);
  Mat2 h = (2.0 * (4.0 * log_r - 5.0) / 32.0) * (R * R.transpose());
  h.diagonal().array() += r2 * (17.0 - 12.0 * log_r) / 32.0;
  return h;
}

}  // namespace stokes_bie::kernels

#endif  // STOKES_BIE_KERNELS_HPP
