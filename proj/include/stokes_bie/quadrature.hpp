#ifndef STOKES_BIE_QUADRATURE_HPP
#define STOKES_BIE_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "stokes_bie/mesh.hpp"
#include "stokes_bie/types.hpp"

namespace stokes_bie {

/// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const LineRule& gauss_legendre(int n);

/// Rule on the reference triangle (0,0), (1,0), (0,1). Points are (xi, eta);
/// weights are positive and sum to 1, so the integral over a triangle of area
/// A is A * sum(w f).
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Exact for polynomials up to `degree` (1 <= degree <= 30).
const TriangleRule& gauss_triangle(int degree);

/// Linear shape functions (barycentric coordinates) at (xi, eta).
inline std::array<double, 3> shape_values(double xi, double eta) { return {1.0 - xi - eta, xi, eta}; }

enum class PairConfiguration { separated = 0, vertex_adjacent = 1, edge_adjacent = 2, coincident = 3 };

const char* to_string(PairConfiguration c);

/// Element pair classification with the local-vertex permutations that move
/// shared vertices to the leading positions, in the same order on both sides.
/// Shared vertices are ordered by global index, the rest by global index too,
/// so the mapping depends only on the vertex sets and not on local labeling.
struct PairMapping {
  PairConfiguration configuration = PairConfiguration::separated;
  std::array<int, 3> perm_p{0, 1, 2};  // local vertex of P placed at position i
  std::array<int, 3> perm_q{0, 1, 2};
};

PairMapping classify_pair(const SurfaceMesh::Face& face_p, const SurfaceMesh::Face& face_q);

/// Four-dimensional rule for a touching element pair in the permuted frames.
/// Weights sum to 1 (the product of the two reference areas is factored out).
struct SingularPairRule {
  std::vector<Vec2> points_p;
  std::vector<Vec2> points_q;
  std::vector<double> weights;
};

/// Sauter-Schwab relative-coordinate rule: Duffy-type splitting of the pair
/// domain into simplices on which the 1/r-type singularity is removed, then
/// tensor Gauss-Legendre of `order` points per direction.
const SingularPairRule& sauter_schwab_rule(PairConfiguration configuration, int order);

struct PairQuadratureOptions {
  int far_degree = 2;         // separation >= far_ratio
  int regular_degree = 5;     // near_ratio <= separation < far_ratio
  int near_degree = 8;        // outer rule for close, non-touching pairs
  int singular_order = 5;     // Gauss points per direction for touching pairs
  int vertex_order = 4;       // ... for vertex-adjacent pairs
  double far_ratio = 8.0;     // centroid distance / max diameter
  double near_ratio = 2.5;
};

struct PointQuadratureOptions {
  int degree = 5;
  double near_factor = 2.0;   // subdivide while distance < near_factor * diameter
  double abs_tol = 1e-10;
  double rel_tol = 1e-7;
  int max_depth = 24;
  bool throw_on_failure = true;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseAbs().maxCoeff();
}
template <class Value>
double magnitude(const std::array<Value, 3>& v) {
  return std::max({magnitude(v[0]), magnitude(v[1]), magnitude(v[2])});
}

template <class Value>
Value zero_value() {
  if constexpr (std::is_arithmetic_v<Value>) {
    return 0.0;
  } else {
    return Value::Zero();
  }
}

struct SubTriangle {
  Vec2 a, b, c;  // reference coordinates in the parent element
};

template <class Value, class Kernel>
std::array<Value, 3> apply_rule(const Triangle& tri, const SubTriangle& s, const TriangleRule& rule, Kernel& kernel,
                                const Value& zero) {
  std::array<Value, 3> acc{zero, zero, zero};
  const Vec2 e1 = s.b - s.a, e2 = s.c - s.a;
  const double fraction = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  const double scale = tri.area * fraction;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 ref = s.a + rule.points[q].x() * e1 + rule.points[q].y() * e2;
    const auto psi = shape_values(ref.x(), ref.y());
    const Value f = kernel(tri.point(ref.x(), ref.y()));
    const double w = rule.weights[q] * scale;
    for (int a = 0; a < 3; ++a) acc[a] += (w * psi[a]) * f;
  }
  return acc;
}

template <class Value, class Kernel>
struct AdaptiveIntegrator {
  const Triangle& tri;
  const Vec3& target;
  Kernel& kernel;
  const PointQuadratureOptions& opt;
  const TriangleRule& rule;
  Value zero;
  double worst_gap = 0.0;
  bool failed = false;

  double distance_ratio(const SubTriangle& s) const {
    const Vec3 p0 = tri.point(s.a.x(), s.a.y());
    const Vec3 p1 = tri.point(s.b.x(), s.b.y());
    const Vec3 p2 = tri.point(s.c.x(), s.c.y());
    const double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
    return (target - (p0 + p1 + p2) / 3.0).norm() / diam;
  }

  std::array<Value, 3> run(const SubTriangle& s, const std::array<Value, 3>& coarse, double abs_tol, int depth) {
    const Vec2 ab = 0.5 * (s.a + s.b), bc = 0.5 * (s.b + s.c), ca = 0.5 * (s.c + s.a);
    const std::array<SubTriangle, 4> kids{SubTriangle{s.a, ab, ca}, SubTriangle{ab, s.b, bc},
                                         SubTriangle{ca, bc, s.c}, SubTriangle{ab, bc, ca}};
    std::array<std::array<Value, 3>, 4> parts;
    std::array<Value, 3> fine{zero, zero, zero};
    for (int k = 0; k < 4; ++k) {
      parts[k] = apply_rule(tri, kids[k], rule, kernel, zero);
      for (int a = 0; a < 3; ++a) fine[a] += parts[k][a];
    }
    std::array<Value, 3> diff;
    for (int a = 0; a < 3; ++a) diff[a] = fine[a] - coarse[a];
    const double gap = magnitude(diff);
    if (gap <= std::max(abs_tol, opt.rel_tol * magnitude(fine))) return fine;
    if (depth >= opt.max_depth) {
      worst_gap = std::max(worst_gap, gap);
      failed = true;
      return fine;
    }
    std::array<Value, 3> sum{zero, zero, zero};
    for (int k = 0; k < 4; ++k) {
      std::array<Value, 3> part = distance_ratio(kids[k]) >= opt.near_factor
                                      ? parts[k]
                                      : run(kids[k], parts[k], 0.5 * abs_tol, depth + 1);
      for (int a = 0; a < 3; ++a) sum[a] += part[a];
    }
    return sum;
  }
};

}  // namespace detail

/// Integral over `tri` of psi_a(Q) K(Q) for the three shape functions a.
/// `kernel(Q)` returns a double or a fixed-size Eigen matrix. When `target` is
/// within near_factor element diameters, the element is subdivided into four
/// until successive levels agree within tolerance.
template <class Kernel>
auto integrate_point_kernel(const Triangle& tri, const Vec3& target, Kernel&& kernel,
                            const PointQuadratureOptions& opt = {}) {
  using Value = std::decay_t<decltype(kernel(tri.v[0]))>;
  const TriangleRule& rule = gauss_triangle(opt.degree);
  const detail::SubTriangle root{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const Value zero = detail::zero_value<Value>();
  auto base = detail::apply_rule(tri, root, rule, kernel, zero);
  const double ratio = (target - tri.centroid()).norm() / tri.diameter();
  if (ratio >= opt.near_factor) return base;

  detail::AdaptiveIntegrator<Value, std::decay_t<Kernel>> integrator{tri, target, kernel, opt, rule, zero};
  auto result = integrator.run(root, base, opt.abs_tol, 0);
  if (integrator.failed && opt.throw_on_failure) {
    std::ostringstream msg;
    msg << "adaptive point quadrature did not converge within depth " << opt.max_depth << ": estimate "
        << detail::magnitude(result) << ", gap " << integrator.worst_gap << ", target distance "
        << (target - tri.centroid()).norm();
    throw NumericalError(msg.str());
  }
  return result;
}

/// Single-shape variant of integrate_point_kernel.
template <class Kernel>
auto integrate_point_kernel(const Triangle& tri, int shape_index, const Vec3& target, Kernel&& kernel,
                            const PointQuadratureOptions& opt = {}) {
  return integrate_point_kernel(tri, target, std::forward<Kernel>(kernel), opt)[shape_index];
}

/// Block of integrals  int_P int_Q psi_a(P) psi_b(Q) K(P, Q) dQ dP  for the
/// nine local shape pairs (a on tri_p, b on tri_q, in the elements' own local
/// vertex order). `kernel(P, Q)` returns a double or fixed-size Eigen matrix.
template <class Kernel>
auto galerkin_pair_integral(const Triangle& tri_p, const Triangle& tri_q, const PairMapping& mapping, Kernel&& kernel,
                            const PairQuadratureOptions& opt = {}, const PointQuadratureOptions& point_opt = {}) {
  using Value = std::decay_t<decltype(kernel(tri_p.v[0], tri_q.v[0]))>;
  const Value zero = detail::zero_value<Value>();
  std::array<std::array<Value, 3>, 3> block;
  for (auto& row : block) row = {zero, zero, zero};

  if (mapping.configuration == PairConfiguration::separated) {
    const double separation =
        (tri_p.centroid() - tri_q.centroid()).norm() / std::max(tri_p.diameter(), tri_q.diameter());
    if (separation < opt.near_ratio) {
      // Outer Gauss rule on P, adaptive inner integration on Q.
      const TriangleRule& outer = gauss_triangle(opt.near_degree);
      for (std::size_t i = 0; i < outer.points.size(); ++i) {
        const auto psi_p = shape_values(outer.points[i].x(), outer.points[i].y());
        const Vec3 P = tri_p.point(outer.points[i].x(), outer.points[i].y());
        const double w = outer.weights[i] * tri_p.area;
        auto inner = integrate_point_kernel(
            tri_q, P, [&](const Vec3& Q) { return kernel(P, Q); }, point_opt);
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) block[a][b] += (w * psi_p[a]) * inner[b];
        }
      }
      return block;
    }
    const TriangleRule& rule = gauss_triangle(separation >= opt.far_ratio ? opt.far_degree : opt.regular_degree);
    const std::size_t n = rule.points.size();
    std::vector<Vec3> pts_q(n);
    std::vector<std::array<double, 3>> psi_q(n);
    for (std::size_t j = 0; j < n; ++j) {
      pts_q[j] = tri_q.point(rule.points[j].x(), rule.points[j].y());
      psi_q[j] = shape_values(rule.points[j].x(), rule.points[j].y());
    }
    const double scale = tri_p.area * tri_q.area;
    for (std::size_t i = 0; i < n; ++i) {
      const auto psi_p = shape_values(rule.points[i].x(), rule.points[i].y());
      const Vec3 P = tri_p.point(rule.points[i].x(), rule.points[i].y());
      std::array<Value, 3> partial{zero, zero, zero};
      for (std::size_t j = 0; j < n; ++j) {
        const Value f = (rule.weights[j]) * kernel(P, pts_q[j]);
        for (int b = 0; b < 3; ++b) partial[b] += psi_q[j][b] * f;
      }
      const double w = rule.weights[i] * scale;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) block[a][b] += (w * psi_p[a]) * partial[b];
      }
    }
    return block;
  }

  const int order = mapping.configuration == PairConfiguration::vertex_adjacent ? opt.vertex_order : opt.singular_order;
  const SingularPairRule& rule = sauter_schwab_rule(mapping.configuration, order);
  const auto& pp = mapping.perm_p;
  const auto& pq = mapping.perm_q;
  const Vec3 p0 = tri_p.v[pp[0]], p1 = tri_p.v[pp[1]], p2 = tri_p.v[pp[2]];
  const Vec3 q0 = tri_q.v[pq[0]], q1 = tri_q.v[pq[1]], q2 = tri_q.v[pq[2]];
  const double scale = tri_p.area * tri_q.area;
  for (std::size_t i = 0; i < rule.weights.size(); ++i) {
    const Vec2& sp = rule.points_p[i];
    const Vec2& sq = rule.points_q[i];
    const Vec3 P = p0 + sp.x() * (p1 - p0) + sp.y() * (p2 - p0);
    const Vec3 Q = q0 + sq.x() * (q1 - q0) + sq.y() * (q2 - q0);
    const auto bp = shape_values(sp.x(), sp.y());
    const auto bq = shape_values(sq.x(), sq.y());
    const Value f = (rule.weights[i] * scale) * kernel(P, Q);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) block[pp[a]][pq[b]] += (bp[a] * bq[b]) * f;
    }
  }
  return block;
}

}  // namespace stokes_bie

#endif  // STOKES_BIE_QUADRATURE_HPP
