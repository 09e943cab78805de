#ifndef STOKES_BIE_VOLUMEGRID_HPP
#define STOKES_BIE_VOLUMEGRID_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "stokes_bie/galerkin.hpp"
#include "stokes_bie/harmonic.hpp"
#include "stokes_bie/mesh.hpp"

namespace stokes_bie {

using ForceField = std::function<Vec3(const Vec3&)>;

/// Regular cuboid lattice of (cells + 1) vertices per axis.
struct CoveringGrid {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  std::array<int, 3> cells{1, 1, 1};

  Vec3 spacing() const {
    return {(hi.x() - lo.x()) / cells[0], (hi.y() - lo.y()) / cells[1], (hi.z() - lo.z()) / cells[2]};
  }
  double cell_volume() const { return spacing().prod(); }
  int vertices_per_axis(int axis) const { return cells[axis] + 1; }
  int num_vertices() const { return (cells[0] + 1) * (cells[1] + 1) * (cells[2] + 1); }
  int index(int i, int j, int k) const { return i + (cells[0] + 1) * (j + (cells[1] + 1) * k); }
  std::array<int, 3> ijk(int index) const;
  Vec3 vertex(int i, int j, int k) const;
  Vec3 vertex(int index) const;
  /// Trapezoidal weight: cell volume / 8 for every incident cell.
  double vertex_weight(int index) const;
};

/// Throws std::invalid_argument unless lo < hi and every count is >= 1.
CoveringGrid build_grid(const Vec3& lo, const Vec3& hi, std::array<int, 3> cells);
/// Cube [-half_width, half_width]^3 with `cells` per axis.
CoveringGrid build_grid(double half_width, int cells);

/// Throws std::invalid_argument unless the mesh lies strictly inside the box.
void require_contains(const CoveringGrid& grid, const SurfaceMesh& mesh);

/// Parity ray casting from each vertex along a seeded random direction; a ray
/// passing within round-off of an edge or vertex is re-cast. Vertices on the
/// surface count as outside.
std::vector<std::uint8_t> classify_vertices(const CoveringGrid& grid, const SurfaceMesh& mesh,
                                            std::uint64_t seed = 12345);

/// True if `point` is enclosed by the mesh (same ray-casting rule).
bool point_inside(const SurfaceMesh& mesh, const Vec3& point, std::uint64_t seed = 12345);

/// Zero-extended remainder F - F0 on the grid vertices.
struct GridField {
  CoveringGrid grid;
  std::vector<std::uint8_t> inside;
  std::vector<Vec3> values;  // exactly zero at outside vertices
};

/// One field per force. Force s uses columns 3 s .. 3 s + 2 of the extension's
/// Dirichlet data as its boundary values.
std::vector<GridField> remainder_fields(const CoveringGrid& grid, const std::vector<std::uint8_t>& inside,
                                        std::span<const ForceField> forces, const HarmonicExtension& extension,
                                        const PointQuadratureOptions& options = {});

GridField remainder_field(const CoveringGrid& grid, const std::vector<std::uint8_t>& inside, const ForceField& force,
                          const HarmonicExtension& extension, const PointQuadratureOptions& options = {});

struct RemainderOptions {
  PointQuadratureOptions point;
  /// Vertices where every field is zero are skipped; off visits them anyway.
  bool skip_zero_vertices = true;
};

/// b_{3a+k} = sum_Q w_Q int psi_a(P) U_kj(Q, P) dP  f_j(Q) for every field
/// sharing one grid. Summation order is fixed, independent of threads.
std::vector<Eigen::VectorXd> remainder_volume_rhs(const SurfaceMesh& mesh, std::span<const GridField> fields,
                                                  double mu, const RemainderOptions& options = {});

Eigen::VectorXd remainder_volume_rhs(const SurfaceMesh& mesh, const GridField& field, double mu,
                                     const RemainderOptions& options = {});

/// Galerkin matrices of H and its outward normal derivative in Q (3N x 3N).
struct HOperators {
  double mu = 1.0;
  Eigen::MatrixXd h;
  Eigen::MatrixXd h_normal;
};

HOperators assemble_h_operators(const SurfaceMesh& mesh, double mu, const AssemblyOptions& options = {});

/// mu * [ H_n F0 - H q ] for force s, with F0 and q the extension's Dirichlet
/// and flux columns 3 s .. 3 s + 2. Equals the Galerkin-tested int_Omega U F0.
Eigen::VectorXd h_boundary_rhs(const HOperators& ops, const HarmonicExtension& extension, int force_index = 0);

/// int_Omega U(Q, X) F(Q) dQ at an off-surface point from the same split:
/// boundary H integrals of (F0, q) plus the grid remainder sum. Cells around X
/// are re-integrated with subdivided Gauss rules and trilinear field values.
Vec3 volume_potential_at(const SurfaceMesh& mesh, const HarmonicExtension& extension, int force_index,
                         const GridField& field, const Vec3& point, double mu,
                         const PointQuadratureOptions& options = {});

/// Grid remainder sum alone at X.
Vec3 remainder_potential_at(const GridField& field, const Vec3& point, double mu);

/// Galerkin-tested int_Omega U F by the midpoint rule on inside cell centres
/// of a cells^3 grid over `box` (reference for the split).
Eigen::VectorXd brute_force_volume_rhs(const SurfaceMesh& mesh, const ForceField& force, double mu,
                                       const CoveringGrid& box, const PointQuadratureOptions& options = {});

/// CSV rows i,j,k,inside,f_x,f_y,f_z.
void write_grid_field_csv(const GridField& field, const std::filesystem::path& path);

}  // namespace stokes_bie

#endif  // STOKES_BIE_VOLUMEGRID_HPP
