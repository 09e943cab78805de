#include "stokes_bie/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

namespace stokes_bie {

Triangle Triangle::make(const Vec3& a, const Vec3& b, const Vec3& c) {
  Triangle t;
  t.v = {a, b, c};
  const Vec3 cross = (b - a).cross(c - a);
  const double twice_area = cross.norm();
  t.area = 0.5 * twice_area;
  t.normal = twice_area > 0.0 ? Vec3(cross / twice_area) : Vec3::Zero();
  return t;
}

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey undirected(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double signed_volume(const std::vector<Vec3>& vertices, const std::vector<SurfaceMesh::Face>& faces) {
  double vol = 0.0;
  for (const auto& f : faces) {
    vol += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  }
  return vol / 6.0;
}

double bbox_diag(const std::vector<Vec3>& vertices) {
  if (vertices.empty()) return 0.0;
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

}  // namespace

SurfaceMesh::SurfaceMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  if (vertices_.empty() || faces_.empty()) throw MeshError("empty mesh");
  const int n = num_nodes();
  for (std::size_t e = 0; e < faces_.size(); ++e) {
    const auto& f = faces_[e];
    for (int i : f) {
      if (i < 0 || i >= n) {
        throw MeshError("face " + std::to_string(e) + " references vertex " + std::to_string(i) + " out of range");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw MeshError("face " + std::to_string(e) + " repeats a vertex");
    }
  }

  const double diag = bbox_diag(vertices_);
  const double min_area = 1e-12 * diag * diag;
  elements_.reserve(faces_.size());
  for (std::size_t e = 0; e < faces_.size(); ++e) {
    const auto& f = faces_[e];
    elements_.push_back(Triangle::make(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]));
    if (!(elements_.back().area > min_area)) {
      throw MeshError("degenerate triangle " + std::to_string(e));
    }
  }

  // Each directed edge must appear once, and its reverse once.
  std::map<EdgeKey, std::array<int, 2>> edge_use;  // [forward count, backward count]
  for (const auto& f : faces_) {
    for (int i = 0; i < 3; ++i) {
      const int a = f[i], b = f[(i + 1) % 3];
      auto& use = edge_use[undirected(a, b)];
      ++use[a < b ? 0 : 1];
    }
  }
  for (const auto& [edge, use] : edge_use) {
    const int total = use[0] + use[1];
    if (total != 2) {
      throw MeshError("edge (" + std::to_string(edge.first) + ", " + std::to_string(edge.second) + ") shared by " +
                      std::to_string(total) + " triangles; surface is not a closed manifold");
    }
    if (use[0] != 1) {
      throw MeshError("inconsistent winding across edge (" + std::to_string(edge.first) + ", " +
                      std::to_string(edge.second) + ")");
    }
  }
  if (signed_volume(vertices_, faces_) <= 0.0) {
    throw MeshError("triangle normals point into the enclosed volume; expected outward winding");
  }

  node_elements_.assign(n, {});
  node_normals_.assign(n, Vec3::Zero());
  for (int e = 0; e < num_elements(); ++e) {
    for (int i : faces_[e]) {
      node_elements_[i].push_back(e);
      node_normals_[i] += elements_[e].area * elements_[e].normal;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (node_elements_[i].empty()) throw MeshError("vertex " + std::to_string(i) + " belongs to no triangle");
    node_normals_[i].normalize();
  }
}

double SurfaceMesh::total_area() const {
  double a = 0.0;
  for (const auto& t : elements_) a += t.area;
  return a;
}

double SurfaceMesh::enclosed_volume() const { return signed_volume(vertices_, faces_); }

double SurfaceMesh::bbox_diagonal() const { return bbox_diag(vertices_); }

Vec3 SurfaceMesh::bbox_min() const {
  Vec3 lo = vertices_.front();
  for (const auto& v : vertices_) lo = lo.cwiseMin(v);
  return lo;
}

Vec3 SurfaceMesh::bbox_max() const {
  Vec3 hi = vertices_.front();
  for (const auto& v : vertices_) hi = hi.cwiseMax(v);
  return hi;
}

double SurfaceMesh::mean_edge_length() const {
  double sum = 0.0;
  for (const auto& t : elements_) sum += t.mean_edge();
  return sum / static_cast<double>(elements_.size());
}

int SurfaceMesh::euler_characteristic() const {
  std::map<EdgeKey, int> edges;
  for (const auto& f : faces_) {
    for (int i = 0; i < 3; ++i) edges[undirected(f[i], f[(i + 1) % 3])] = 1;
  }
  return num_nodes() - static_cast<int>(edges.size()) + num_elements();
}

SurfaceMesh make_icosphere(int subdivisions, double radius, const Vec3& center) {
  if (subdivisions < 0 || subdivisions > 6) {
    throw std::invalid_argument("icosphere subdivisions must lie in [0, 6], got " + std::to_string(subdivisions));
  }
  if (!(radius > 0.0)) throw std::invalid_argument("icosphere radius must be positive");

  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> unit = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
      {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : unit) v.normalize();
  std::vector<SurfaceMesh::Face> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };

  for (int level = 0; level < subdivisions; ++level) {
    std::map<EdgeKey, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = undirected(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      unit.push_back((unit[a] + unit[b]).normalized());
      const int idx = static_cast<int>(unit.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<SurfaceMesh::Face> refined;
    refined.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      refined.push_back({f[0], ab, ca});
      refined.push_back({f[1], bc, ab});
      refined.push_back({f[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    faces = std::move(refined);
  }

  std::vector<Vec3> vertices;
  vertices.reserve(unit.size());
  for (const auto& u : unit) vertices.push_back(center + radius * u);
  return SurfaceMesh(std::move(vertices), std::move(faces));
}

std::vector<SurfaceMesh::Face> orient_faces(const std::vector<Vec3>& vertices, std::vector<SurfaceMesh::Face> faces) {
  const int nf = static_cast<int>(faces.size());
  std::map<EdgeKey, std::vector<int>> edge_faces;
  for (int e = 0; e < nf; ++e) {
    for (int i = 0; i < 3; ++i) edge_faces[undirected(faces[e][i], faces[e][(i + 1) % 3])].push_back(e);
  }
  for (const auto& [edge, users] : edge_faces) {
    if (users.size() != 2) {
      throw MeshError("edge (" + std::to_string(edge.first) + ", " + std::to_string(edge.second) + ") shared by " +
                      std::to_string(users.size()) + " triangles; surface is not a closed manifold");
    }
  }
  auto has_directed = [](const SurfaceMesh::Face& f, int a, int b) {
    for (int i = 0; i < 3; ++i) {
      if (f[i] == a && f[(i + 1) % 3] == b) return true;
    }
    return false;
  };

  std::vector<int> state(nf, -1);  // -1 unvisited, 0 kept, 1 flipped
  for (int seed = 0; seed < nf; ++seed) {
    if (state[seed] != -1) continue;
    state[seed] = 0;
    std::queue<int> queue;
    queue.push(seed);
    std::vector<int> component;
    while (!queue.empty()) {
      const int e = queue.front();
      queue.pop();
      component.push_back(e);
      const auto& f = faces[e];
      for (int i = 0; i < 3; ++i) {
        const int a = f[i], b = f[(i + 1) % 3];
        for (int other : edge_faces[undirected(a, b)]) {
          if (other == e) continue;
          // A consistently wound neighbour traverses the shared edge as b -> a.
          const bool consistent = has_directed(faces[other], b, a);
          if (state[other] == -1) {
            if (!consistent) std::swap(faces[other][1], faces[other][2]);
            state[other] = consistent ? 0 : 1;
            queue.push(other);
          } else if (!consistent) {
            throw MeshError("surface is not orientable (conflict at face " + std::to_string(other) + ")");
          }
        }
      }
    }
    double vol = 0.0;
    for (int e : component) {
      const auto& f = faces[e];
      vol += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
    }
    if (vol < 0.0) {
      for (int e : component) std::swap(faces[e][1], faces[e][2]);
    }
  }
  return faces;
}

Vec3 closest_point(const Triangle& tri, const Vec3& p) {
  // Voronoi-region walk over vertices, edges and the face.
  const Vec3 &a = tri.v[0], &b = tri.v[1], &c = tri.v[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + (vb * denom) * ab + (vc * denom) * ac;
}

double distance_to_surface(const SurfaceMesh& mesh, const Vec3& point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.elements()) best = std::min(best, (closest_point(tri, point) - point).norm());
  return best;
}

Eigen::SparseMatrix<double> mass_matrix(const SurfaceMesh& mesh) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(9 * mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& f = mesh.face(e);
    const double a = mesh.element(e).area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) entries.emplace_back(f[i], f[j], i == j ? a / 6.0 : a / 12.0);
    }
  }
  Eigen::SparseMatrix<double> m(mesh.num_nodes(), mesh.num_nodes());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

Vec3 mean_square_error(std::span<const Vec3> computed, std::span<const Vec3> exact) {
  if (computed.size() != exact.size()) {
    throw std::invalid_argument("mean_square_error: " + std::to_string(computed.size()) + " computed vs " +
                                std::to_string(exact.size()) + " exact values");
  }
  if (computed.empty()) throw std::invalid_argument("mean_square_error: empty field");
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < computed.size(); ++k) sum += (computed[k] - exact[k]).cwiseAbs2();
  return (sum / static_cast<double>(computed.size())).cwiseSqrt();
}

double mean_square_error(std::span<const double> computed, std::span<const double> exact) {
  if (computed.size() != exact.size()) {
    throw std::invalid_argument("mean_square_error: length mismatch");
  }
  if (computed.empty()) throw std::invalid_argument("mean_square_error: empty field");
  double sum = 0.0;
  for (std::size_t k = 0; k < computed.size(); ++k) sum += (computed[k] - exact[k]) * (computed[k] - exact[k]);
  return std::sqrt(sum / static_cast<double>(computed.size()));
}

double ErrorTable::max_error() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.error);
  return m;
}

double ErrorTable::at(const std::string& field, const std::string& component) const {
  for (const auto& r : rows) {
    if (r.field == field && r.component == component) return r.error;
  }
  throw std::out_of_range("no error entry for " + field + "/" + component);
}

}  // namespace stokes_bie
