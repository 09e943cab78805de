#include "stokes_bie/gradient.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <exception>
#include <numbers>
#include <set>
#include <sstream>

#include "stokes_bie/kernels.hpp"
#include "stokes_bie/quadrature.hpp"

namespace stokes_bie {

namespace {

constexpr double kPi = std::numbers::pi;

/// Barycentric (xi, eta) of a point lying in the plane of `tri`.
struct PlaneCoordinates {
  Vec3 origin, e1, e2;
  Mat2 inverse_gram;

  explicit PlaneCoordinates(const Triangle& tri) : origin(tri.v[0]), e1(tri.v[1] - tri.v[0]), e2(tri.v[2] - tri.v[0]) {
    Mat2 gram;
    gram << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
    inverse_gram = gram.inverse();
  }
  Vec2 operator()(const Vec3& q) const {
    const Vec3 d = q - origin;
    return inverse_gram * Vec2(e1.dot(d), e2.dot(d));
  }
};

/// (k, m) entry of U_kj,m tau_j - T_ijk,m u_i n_j at R = Q - X.
Mat3 gradient_kernel(const Vec3& R, const Vec3& u, const Vec3& n, const Vec3& tau, double mu) {
  const double r2 = R.squaredNorm();
  const double r = std::sqrt(r2);
  const double inv_r3 = 1.0 / (r2 * r);
  const double inv_r5 = inv_r3 / r2;
  const double uR = u.dot(R), nR = n.dot(R), tR = tau.dot(R);

  // T_ijk,m u_i n_j with T_ijk,m = -(3/4pi)[-d_im R_j R_k - d_jm R_i R_k - d_km R_i R_j + 5 R_i R_j R_k R_m / r^2] / r^5
  const double c = -3.0 / (4.0 * kPi);
  Mat3 t = (5.0 * c * uR * nR * inv_r5 / r2) * (R * R.transpose());
  t -= (c * inv_r5) * (nR * R * u.transpose() + uR * R * n.transpose());
  t.diagonal().array() -= c * inv_r5 * uR * nR;

  // U_kj,m tau_j
  const double cu = 1.0 / (8.0 * kPi * mu);
  Mat3 s = (cu * inv_r3) * (tau * R.transpose() - R * tau.transpose());
  s += (3.0 * cu * tR * inv_r5) * (R * R.transpose());
  s.diagonal().array() -= cu * tR * inv_r3;
  return s - t;
}

/// Neville extrapolation to x = 0 from samples (x_i, v_i).
Mat3 extrapolate(const std::vector<double>& x, std::vector<Mat3> v) {
  const std::size_t n = x.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = x[i], xj = x[i + level];
      v[i] = (xj * v[i] - xi * v[i + 1]) / (xj - xi);
    }
  }
  return v[0];
}

std::vector<std::vector<int>> element_neighbourhoods(const SurfaceMesh& mesh) {
  std::vector<std::vector<int>> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::set<int> touching;
    for (int v : mesh.face(e)) {
      for (int other : mesh.node_elements()[v]) touching.insert(other);
    }
    out[e].assign(touching.begin(), touching.end());
  }
  return out;
}

}  // namespace

Mat3 representation_gradient(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                             const std::vector<int>& elements, const PointQuadratureOptions& options) {
  const double sign = fluid_sign(solution.domain);
  const double mu = solution.operators ? solution.operators->mu : 1.0;
  auto element_term = [&](int e) -> Mat3 {
    const Triangle& tri = mesh.element(e);
    const auto& f = mesh.face(e);
    const PlaneCoordinates coords(tri);
    const Vec3 n = sign * tri.normal;
    const auto parts = integrate_point_kernel(
        tri, point,
        [&](const Vec3& Q) -> Mat3 {
          const Vec2 xy = coords(Q);
          const auto psi = shape_values(xy.x(), xy.y());
          const Vec3 u = psi[0] * solution.velocity[f[0]] + psi[1] * solution.velocity[f[1]] +
                         psi[2] * solution.velocity[f[2]];
          const Vec3 tau = psi[0] * solution.traction[f[0]] + psi[1] * solution.traction[f[1]] +
                           psi[2] * solution.traction[f[2]];
          return gradient_kernel(Q - point, u, n, tau, mu);
        },
        options);
    return parts[0] + parts[1] + parts[2];
  };
  Mat3 total = Mat3::Zero();
  if (elements.empty()) {
    for (int e = 0; e < mesh.num_elements(); ++e) total += element_term(e);
  } else {
    for (int e : elements) total += element_term(e);
  }
  return total;
}

Mat3 volume_gradient_term(const SurfaceMesh& mesh, const std::function<Vec3(const Vec3&)>& force, double mu,
                          const Vec3& point, int line_points, const PointQuadratureOptions& options) {
  const LineRule& line = gauss_legendre(line_points);
  Mat3 total = Mat3::Zero();
  for (const auto& tri : mesh.elements()) {
    const Vec3 n = tri.normal;
    const auto parts = integrate_point_kernel(
        tri, point,
        [&](const Vec3& Y) -> Mat3 {
          const Vec3 R = Y - point;
          Vec3 mean_force = Vec3::Zero();
          for (std::size_t i = 0; i < line.points.size(); ++i) {
            mean_force += line.weights[i] * force(point + line.points[i] * R);
          }
          Mat3 out;
          for (int m = 0; m < 3; ++m) out.col(m) = kernels::stokeslet_deriv_r(R, mu, m) * mean_force;
          return R.dot(n) * out;
        },
        options);
    total += parts[0] + parts[1] + parts[2];
  }
  return -total;
}

GradientRhs limit_difference_rhs(const SurfaceMesh& mesh, const BoundarySolution& solution,
                                 const GradientOptions& options) {
  const auto& eps = options.eps_schedule;
  if (eps.size() < 2) throw std::invalid_argument("limit_difference_rhs: need at least two offsets");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1]))) {
      throw std::invalid_argument("limit_difference_rhs: offsets must be positive and decreasing");
    }
  }
  if (options.richardson_power < 1) throw std::invalid_argument("limit_difference_rhs: power must be >= 1");
  if (static_cast<int>(solution.velocity.size()) != mesh.num_nodes()) {
    throw std::invalid_argument("limit_difference_rhs: solution does not match the mesh");
  }

  const double sign = fluid_sign(solution.domain);
  const double mu = solution.operators ? solution.operators->mu : 1.0;
  const TriangleRule& outer = gauss_triangle(options.outer_degree);
  const auto neighbourhoods = options.local_only ? element_neighbourhoods(mesh) : std::vector<std::vector<int>>{};
  const int ne = mesh.num_elements();

  std::vector<double> x(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) x[i] = std::pow(eps[i], options.richardson_power);

  std::vector<std::array<Mat3, 3>> local(ne);
  std::vector<double> residual(ne, 0.0), magnitude(ne, 0.0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int e = 0; e < ne; ++e) {
    try {
      const Triangle& tri = mesh.element(e);
      const auto& f = mesh.face(e);
      const double h = tri.mean_edge();
      const std::vector<int>& subset = options.local_only ? neighbourhoods[e] : std::vector<int>{};
      local[e] = {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
      for (std::size_t q = 0; q < outer.points.size(); ++q) {
        const auto psi = shape_values(outer.points[q].x(), outer.points[q].y());
        const Vec3 P = tri.point(outer.points[q].x(), outer.points[q].y());
        const Vec3 normal = sign * tri.normal;
        // Offsets shrink with the distance to the element boundary so that
        // eps stays small against it and the expansion in eps stays regular.
        double scale = h;
        for (int b = 0; b < 3; ++b) {
          const double opposite = (tri.v[(b + 2) % 3] - tri.v[(b + 1) % 3]).norm();
          scale = std::min(scale, psi[b] * 2.0 * tri.area / opposite);
        }
        std::vector<Mat3> samples(eps.size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
          const Vec3 inside = P - eps[i] * scale * normal;
          const Vec3 outside = P + eps[i] * scale * normal;
          samples[i] = representation_gradient(mesh, solution, inside, subset, options.point) -
                       representation_gradient(mesh, solution, outside, subset, options.point);
          if (options.volume_force) {
            samples[i] += volume_gradient_term(mesh, options.volume_force, mu, inside, options.volume_line_points,
                                               options.point) -
                          volume_gradient_term(mesh, options.volume_force, mu, outside, options.volume_line_points,
                                               options.point);
          }
        }
        const Mat3 value = extrapolate(x, samples);
        const Mat3 coarse_free =
            extrapolate(std::vector<double>(x.begin() + 1, x.end()), std::vector<Mat3>(samples.begin() + 1, samples.end()));
        residual[e] = std::max(residual[e], (value - coarse_free).cwiseAbs().maxCoeff());
        magnitude[e] = std::max(magnitude[e], value.cwiseAbs().maxCoeff());
        const double w = outer.weights[q] * tri.area;
        for (int b = 0; b < 3; ++b) local[e][b] += (w * psi[b]) * value;
      }
    } catch (...) {
#pragma omp critical(stokes_bie_gradient_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  GradientRhs out;
  for (auto& r : out.rhs) r = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < ne; ++e) {
    const auto& f = mesh.face(e);
    for (int b = 0; b < 3; ++b) {
      for (int k = 0; k < 3; ++k) {
        for (int m = 0; m < 3; ++m) out.rhs[3 * k + m][f[b]] += local[e][b](k, m);
      }
    }
  }
  // Floor the scale by the size of the boundary data so that near-zero jumps
  // (rigid motions) are judged against the data, not against roundoff.
  double data_scale = 0.0;
  for (std::size_t a = 0; a < solution.velocity.size(); ++a) {
    data_scale = std::max(data_scale, solution.velocity[a].cwiseAbs().maxCoeff() / mesh.mean_edge_length());
    if (a < solution.traction.size()) data_scale = std::max(data_scale, solution.traction[a].cwiseAbs().maxCoeff() / mu);
  }
  const double scale = std::max(*std::max_element(magnitude.begin(), magnitude.end()), data_scale);
  const double worst = *std::max_element(residual.begin(), residual.end());
  out.extrapolation_residual = scale > 0.0 ? worst / scale : worst;
  if (!(out.extrapolation_residual <= options.residual_tolerance)) {
    const auto at = std::max_element(residual.begin(), residual.end()) - residual.begin();
    std::ostringstream msg;
    msg << "offset extrapolation did not settle: relative residual " << out.extrapolation_residual << " on element "
        << at;
    throw NumericalError(msg.str());
  }
  return out;
}

std::vector<double> GradientField::component(int k, int m) const {
  std::vector<double> out(values.size());
  for (std::size_t a = 0; a < values.size(); ++a) out[a] = values[a](k, m);
  return out;
}

GradientField solve_gradients(const Eigen::SparseMatrix<double>& mass, const GradientRhs& rhs) {
  const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(mass);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix factorization failed");
  const Eigen::Index n = mass.rows();
  GradientField field;
  field.values.assign(n, Mat3::Zero());
  for (int c = 0; c < 9; ++c) {
    if (rhs.rhs[c].size() != n) throw std::invalid_argument("solve_gradients: right-hand side length mismatch");
    const Eigen::VectorXd g = llt.solve(rhs.rhs[c]);
    for (Eigen::Index a = 0; a < n; ++a) field.values[a](c / 3, c % 3) = g[a];
  }
  return field;
}

std::vector<double> divergence(const GradientField& field) {
  std::vector<double> out(field.values.size());
  for (std::size_t a = 0; a < field.values.size(); ++a) out[a] = field.values[a].trace();
  return out;
}

}  // namespace stokes_bie
