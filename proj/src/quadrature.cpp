#include "stokes_bie/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace stokes_bie {

namespace {

constexpr int kMaxLinePoints = 64;
constexpr int kMaxTriangleDegree = 30;

LineRule build_gauss_legendre(int n) {
  // Newton iteration on P_n over [-1, 1], mapped to [0, 1].
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

TriangleRule symmetric_rule(int degree, std::initializer_list<std::array<double, 2>> orbits_s3,
                            double centroid_weight) {
  // orbits_s3: {a, w} generating (a, a), (1 - 2a, a), (a, 1 - 2a).
  TriangleRule rule;
  rule.degree = degree;
  if (centroid_weight > 0.0) {
    rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    rule.weights.push_back(centroid_weight);
  }
  for (const auto& [a, w] : orbits_s3) {
    rule.points.emplace_back(a, a);
    rule.points.emplace_back(1.0 - 2.0 * a, a);
    rule.points.emplace_back(a, 1.0 - 2.0 * a);
    rule.weights.insert(rule.weights.end(), 3, w);
  }
  return rule;
}

TriangleRule collapsed_rule(int degree) {
  // Duffy-collapsed tensor Gauss: xi = u, eta = v (1 - u), Jacobian (1 - u).
  const int n = (degree + 2) / 2 + 1;
  const LineRule& g = gauss_legendre(n);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

TriangleRule build_triangle_rule(int degree) {
  switch (degree) {
    case 1:
      return symmetric_rule(1, {}, 1.0);
    case 2:
      return symmetric_rule(2, {{1.0 / 6.0, 1.0 / 3.0}}, 0.0);
    case 3:
    case 4:
      return symmetric_rule(4, {{0.445948490915965, 0.223381589678011}, {0.091576213509771, 0.109951743655322}},
                            0.0);
    case 5:
      return symmetric_rule(5, {{0.470142064105115, 0.132394152788506}, {0.101286507323456, 0.125939180544827}},
                            0.225);
    default:
      return collapsed_rule(degree);
  }
}

struct RuleKey {
  PairConfiguration configuration;
  int order;
  auto operator<=>(const RuleKey&) const = default;
};

SingularPairRule build_sauter_schwab(PairConfiguration configuration, int order) {
  const LineRule& g = gauss_legendre(order);
  SingularPairRule rule;
  auto push = [&](double x1, double y1, double x2, double y2, double w) {
    // Reference simplex {0 <= y <= x <= 1} mapped onto the unit triangle by (x - y, y).
    rule.points_p.emplace_back(x1 - y1, y1);
    rule.points_q.emplace_back(x2 - y2, y2);
    rule.weights.push_back(4.0 * w);
  };
  for (int a = 0; a < order; ++a) {
    const double xi = g.points[a];
    for (int b = 0; b < order; ++b) {
      const double e3 = g.points[b];
      for (int c = 0; c < order; ++c) {
        const double e2 = g.points[c];
        for (int d = 0; d < order; ++d) {
          const double e1 = g.points[d];
          const double w = g.weights[a] * g.weights[b] * g.weights[c] * g.weights[d];
          switch (configuration) {
            case PairConfiguration::coincident: {
              const double jw = w * xi * xi * xi * e1 * e1 * e2;
              push(xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1), jw);
              push(xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi, xi * (1 - e1 + e1 * e2), jw);
              push(xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2), jw);
              push(xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * (1 - e2 + e2 * e3), jw);
              push(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2), jw);
              push(xi, xi * e1 * (1 - e2), xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), jw);
              break;
            }
            case PairConfiguration::edge_adjacent: {
              const double jw = w * xi * xi * xi * e1 * e1 * e2;
              push(xi, xi * e1 * e3, xi * (1 - e1 * e2), xi * e1 * (1 - e2), w * xi * xi * xi * e1 * e1);
              push(xi, xi * e1, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), jw);
              push(xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * e2 * e3, jw);
              push(xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi, xi * e1, jw);
              push(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * e2, jw);
              break;
            }
            case PairConfiguration::vertex_adjacent: {
              const double jw = w * xi * xi * xi * e2;
              push(xi, xi * e1, xi * e2, xi * e2 * e3, jw);
              push(xi * e2, xi * e2 * e3, xi, xi * e1, jw);
              break;
            }
            case PairConfiguration::separated:
              throw std::invalid_argument("sauter_schwab_rule: separated pairs use regular rules");
          }
        }
      }
    }
  }
  return rule;
}

}  // namespace

const LineRule& gauss_legendre(int n) {
  static const std::vector<LineRule> rules = [] {
    std::vector<LineRule> r(kMaxLinePoints + 1);
    for (int k = 1; k <= kMaxLinePoints; ++k) r[k] = build_gauss_legendre(k);
    return r;
  }();
  if (n < 1 || n > kMaxLinePoints) throw std::invalid_argument("gauss_legendre: unsupported point count");
  return rules[n];
}

const TriangleRule& gauss_triangle(int degree) {
  static const std::vector<TriangleRule> rules = [] {
    std::vector<TriangleRule> r(kMaxTriangleDegree + 1);
    for (int d = 1; d <= kMaxTriangleDegree; ++d) r[d] = build_triangle_rule(d);
    return r;
  }();
  if (degree < 1 || degree > kMaxTriangleDegree) {
    throw std::invalid_argument("gauss_triangle: degree must lie in [1, 30], got " + std::to_string(degree));
  }
  return rules[degree];
}

const char* to_string(PairConfiguration c) {
  switch (c) {
    case PairConfiguration::separated:
      return "separated";
    case PairConfiguration::vertex_adjacent:
      return "vertex-adjacent";
    case PairConfiguration::edge_adjacent:
      return "edge-adjacent";
    case PairConfiguration::coincident:
      return "coincident";
  }
  return "unknown";
}

PairMapping classify_pair(const SurfaceMesh::Face& face_p, const SurfaceMesh::Face& face_q) {
  std::array<int, 3> shared{};
  int count = 0;
  for (int i = 0; i < 3; ++i) {
    if (std::find(face_q.begin(), face_q.end(), face_p[i]) != face_q.end()) shared[count++] = face_p[i];
  }
  std::sort(shared.begin(), shared.begin() + count);

  auto permutation = [&](const SurfaceMesh::Face& face) {
    std::array<int, 3> perm{};
    for (int s = 0; s < count; ++s) {
      perm[s] = static_cast<int>(std::find(face.begin(), face.end(), shared[s]) - face.begin());
    }
    std::array<int, 3> rest{};
    int nrest = 0;
    for (int i = 0; i < 3; ++i) {
      if (std::find(shared.begin(), shared.begin() + count, face[i]) == shared.begin() + count) rest[nrest++] = i;
    }
    std::sort(rest.begin(), rest.begin() + nrest, [&](int a, int b) { return face[a] < face[b]; });
    for (int i = 0; i < nrest; ++i) perm[count + i] = rest[i];
    return perm;
  };

  PairMapping m;
  m.configuration = static_cast<PairConfiguration>(count);
  m.perm_p = permutation(face_p);
  m.perm_q = permutation(face_q);
  return m;
}

const SingularPairRule& sauter_schwab_rule(PairConfiguration configuration, int order) {
  static std::mutex lock;
  static std::map<RuleKey, std::unique_ptr<SingularPairRule>> cache;
  if (order < 1 || order > kMaxLinePoints) throw std::invalid_argument("sauter_schwab_rule: bad order");
  const std::lock_guard<std::mutex> guard(lock);
  auto& slot = cache[RuleKey{configuration, order}];
  if (!slot) slot = std::make_unique<SingularPairRule>(build_sauter_schwab(configuration, order));
  return *slot;
}

}  // namespace stokes_bie
