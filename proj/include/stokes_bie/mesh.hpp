#ifndef STOKES_BIE_MESH_HPP
#define STOKES_BIE_MESH_HPP

#include <Eigen/Sparse>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stokes_bie/types.hpp"

namespace stokes_bie {

/// Flat triangle with cached geometry. Vertex order fixes the shape-function order.
struct Triangle {
  std::array<Vec3, 3> v;
  Vec3 normal;  // unit, right-handed w.r.t. v[0] -> v[1] -> v[2]
  double area = 0.0;

  Vec3 point(double xi, double eta) const { return v[0] + xi * (v[1] - v[0]) + eta * (v[2] - v[0]); }
  Vec3 centroid() const { return (v[0] + v[1] + v[2]) / 3.0; }
  double diameter() const {
    return std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()});
  }
  double mean_edge() const { return ((v[1] - v[0]).norm() + (v[2] - v[1]).norm() + (v[0] - v[2]).norm()) / 3.0; }

  static Triangle make(const Vec3& a, const Vec3& b, const Vec3& c);
};

/// Closed, consistently oriented triangulation with a linear nodal basis.
///
/// Construction validates the mesh: indices in range, no degenerate triangle
/// (area > 1e-12 * bbox_diag^2), every edge shared by exactly two triangles
/// with opposite orientation. Normals follow counter-clockwise winding seen
/// from outside; a mesh whose enclosed signed volume is negative is rejected.
class SurfaceMesh {
 public:
  using Face = std::array<int, 3>;

  SurfaceMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  int num_nodes() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(faces_.size()); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Vec3& vertex(int i) const { return vertices_[i]; }
  const Face& face(int e) const { return faces_[e]; }
  const Triangle& element(int e) const { return elements_[e]; }
  const std::vector<Triangle>& elements() const { return elements_; }

  /// Area-weighted average of incident element normals, normalized.
  const std::vector<Vec3>& node_normals() const { return node_normals_; }
  /// Elements incident to each node.
  const std::vector<std::vector<int>>& node_elements() const { return node_elements_; }

  double total_area() const;
  double enclosed_volume() const;
  double bbox_diagonal() const;
  Vec3 bbox_min() const;
  Vec3 bbox_max() const;
  /// Mean element edge length.
  double mean_edge_length() const;
  /// Euler characteristic V - E + F.
  int euler_characteristic() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Triangle> elements_;
  std::vector<Vec3> node_normals_;
  std::vector<std::vector<int>> node_elements_;
};

/// Icosahedron refined `subdivisions` times by edge-midpoint splitting, with
/// every new vertex projected back onto the sphere. Element count 20 * 4^s.
SurfaceMesh make_icosphere(int subdivisions, double radius = 1.0, const Vec3& center = Vec3::Zero());

enum class MeshFormat { off, obj };

MeshFormat format_from_path(const std::filesystem::path& path);

struct LoadOptions {
  /// Flip faces by breadth-first propagation instead of rejecting
  /// inconsistent winding; a non-orientable surface is still an error.
  bool repair_orientation = false;
};

SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format, const LoadOptions& options = {});
SurfaceMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options = {});
void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format);

/// Parses mesh text; exposed so parse errors can be tested without files.
SurfaceMesh parse_mesh(std::istream& in, MeshFormat format, const LoadOptions& options = {});

/// Consistent-winding repair: flips faces to agree with their neighbours and
/// orients the whole surface outward. Throws MeshError if non-orientable.
std::vector<SurfaceMesh::Face> orient_faces(const std::vector<Vec3>& vertices, std::vector<SurfaceMesh::Face> faces);

/// Closest point of a triangle to `point`.
Vec3 closest_point(const Triangle& tri, const Vec3& point);

/// Distance from `point` to the closest surface triangle (linear scan).
double distance_to_surface(const SurfaceMesh& mesh, const Vec3& point);

/// M_ab = integral of psi_a psi_b over the surface.
Eigen::SparseMatrix<double> mass_matrix(const SurfaceMesh& mesh);

/// Per-component [ (1/N) sum eps_k^2 ]^(1/2).
Vec3 mean_square_error(std::span<const Vec3> computed, std::span<const Vec3> exact);
double mean_square_error(std::span<const double> computed, std::span<const double> exact);

/// Per-field, per-component mean-square nodal errors, optionally paired with
/// reference values (e.g. published magnitudes) for ratio reporting.
struct ErrorTable {
  struct Row {
    std::string field;      // "u", "tau", "u1,m" ...
    std::string component;  // "x", "y", "z" or "m=1" ...
    double error = 0.0;
    double reference = 0.0;  // 0 when no reference is known
  };
  std::string name;
  std::vector<Row> rows;

  void add(std::string field, std::string component, double error, double reference = 0.0) {
    rows.push_back({std::move(field), std::move(component), error, reference});
  }
  double max_error() const;
  /// Error for (field, component); throws std::out_of_range if absent.
  double at(const std::string& field, const std::string& component) const;
};

}  // namespace stokes_bie

#endif  // STOKES_BIE_MESH_HPP
