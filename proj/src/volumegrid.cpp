#include "stokes_bie/volumegrid.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "stokes_bie/kernels.hpp"
#include "stokes_bie/quadrature.hpp"

namespace stokes_bie {

// ---------------------------------------------------------------------------
// Grid geometry

std::array<int, 3> CoveringGrid::ijk(int index) const {
  const int nx = cells[0] + 1, ny = cells[1] + 1;
  return {index % nx, (index / nx) % ny, index / (nx * ny)};
}

Vec3 CoveringGrid::vertex(int i, int j, int k) const {
  const Vec3 h = spacing();
  // Last vertex pinned to `hi` so the box corners are exact.
  auto coord = [&](int axis, int idx) { return idx == cells[axis] ? hi[axis] : lo[axis] + idx * h[axis]; };
  return {coord(0, i), coord(1, j), coord(2, k)};
}

Vec3 CoveringGrid::vertex(int index) const {
  const auto [i, j, k] = ijk(index);
  return vertex(i, j, k);
}

double CoveringGrid::vertex_weight(int index) const {
  const auto c = ijk(index);
  double w = cell_volume() / 8.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (c[axis] > 0 && c[axis] < cells[axis]) w *= 2.0;
  }
  return w;
}

CoveringGrid build_grid(const Vec3& lo, const Vec3& hi, std::array<int, 3> cells) {
  for (int axis = 0; axis < 3; ++axis) {
    if (cells[axis] < 1) throw std::invalid_argument("build_grid: cell count must be at least 1");
    if (!(hi[axis] > lo[axis])) throw std::invalid_argument("build_grid: box has non-positive extent");
  }
  return CoveringGrid{lo, hi, cells};
}

CoveringGrid build_grid(double half_width, int cells) {
  return build_grid(Vec3::Constant(-half_width), Vec3::Constant(half_width), {cells, cells, cells});
}

void require_contains(const CoveringGrid& grid, const SurfaceMesh& mesh) {
  const Vec3 lo = mesh.bbox_min(), hi = mesh.bbox_max();
  for (int axis = 0; axis < 3; ++axis) {
    if (!(lo[axis] > grid.lo[axis] && hi[axis] < grid.hi[axis])) {
      std::ostringstream msg;
      msg << "covering grid [" << grid.lo.transpose() << "] - [" << grid.hi.transpose()
          << "] does not strictly contain the mesh bounding box [" << lo.transpose() << "] - [" << hi.transpose()
          << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Inside / outside

namespace {

enum class RayHit { none, hit, degenerate, on_surface };

RayHit intersect(const Triangle& tri, const Vec3& origin, const Vec3& dir, double scale) {
  const Vec3 e1 = tri.v[1] - tri.v[0], e2 = tri.v[2] - tri.v[0];
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  const Vec3 s = origin - tri.v[0];
  const double eps = 1e-10;
  if (std::abs(det) < eps * e1.norm() * e2.norm()) {
    // Ray parallel to the plane: degenerate only if it lies in it.
    const double plane_dist = std::abs(s.dot(tri.normal));
    return plane_dist < 1e-12 * scale ? RayHit::degenerate : RayHit::none;
  }
  const double inv = 1.0 / det;
  const double u = s.dot(p) * inv;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  const double t = e2.dot(q) * inv;
  if (u < -eps || v < -eps || u + v > 1.0 + eps) return RayHit::none;
  if (std::abs(t) <= 1e-12 * scale) return RayHit::on_surface;
  if (t < 0.0) return RayHit::none;
  if (u < eps || v < eps || u + v > 1.0 - eps) return RayHit::degenerate;
  return RayHit::hit;
}

bool cast_inside(const SurfaceMesh& mesh, const Vec3& point, std::mt19937_64& rng) {
  const Vec3 lo = mesh.bbox_min(), hi = mesh.bbox_max();
  if ((point.array() <= lo.array()).any() || (point.array() >= hi.array()).any()) return false;
  const double scale = mesh.bbox_diagonal();
  std::normal_distribution<double> gauss;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    int crossings = 0;
    bool degenerate = false;
    for (const auto& tri : mesh.elements()) {
      const RayHit h = intersect(tri, point, dir, scale);
      if (h == RayHit::on_surface) return false;
      if (h == RayHit::degenerate) {
        degenerate = true;
        break;
      }
      if (h == RayHit::hit) ++crossings;
    }
    if (!degenerate) return crossings % 2 == 1;
  }
  throw NumericalError("ray casting failed to find a non-degenerate direction");
}

std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Tested boundary moments of a weighted point cloud:
/// out[s]_{3a+k} += sum_i w_i int psi_a(P) U(X_i, P) dP  f_s(X_i).
/// Parallel over elements; element buffers are merged in element order.
std::vector<Eigen::VectorXd> accumulate_moments(const SurfaceMesh& mesh, const std::vector<Vec3>& points,
                                                const std::vector<double>& weights,
                                                const std::vector<std::vector<Vec3>>& values, double mu,
                                                const PointQuadratureOptions& options) {
  const int ne = mesh.num_elements();
  const int nf = static_cast<int>(values.size());
  const int np = static_cast<int>(points.size());
  std::vector<std::vector<std::array<Vec3, 3>>> local(ne, std::vector<std::array<Vec3, 3>>(nf));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int e = 0; e < ne; ++e) {
    auto& acc = local[e];
    for (auto& a : acc) a = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    const Triangle& tri = mesh.element(e);
    for (int i = 0; i < np; ++i) {
      const Vec3 X = points[i];
      try {
        const auto parts = integrate_point_kernel(
            tri, X, [&](const Vec3& P) -> Mat3 { return kernels::stokeslet_r(X - P, mu); }, options);
        for (int s = 0; s < nf; ++s) {
          const Vec3 f = weights[i] * values[s][i];
          for (int b = 0; b < 3; ++b) acc[s][b] += parts[b] * f;
        }
      } catch (const std::exception& err) {
#pragma omp critical(stokes_bie_moment_failure)
        if (!failure) {
          std::ostringstream msg;
          msg << "grid moment at (" << X.transpose() << ") on element " << e << ": " << err.what();
          failure = std::make_exception_ptr(NumericalError(msg.str()));
        }
        break;
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Eigen::VectorXd> out(nf, Eigen::VectorXd::Zero(3 * mesh.num_nodes()));
  for (int e = 0; e < ne; ++e) {
    const auto& f = mesh.face(e);
    for (int s = 0; s < nf; ++s) {
      for (int b = 0; b < 3; ++b) out[s].segment<3>(3 * f[b]) += local[e][s][b];
    }
  }
  return out;
}

}  // namespace

bool point_inside(const SurfaceMesh& mesh, const Vec3& point, std::uint64_t seed) {
  auto rng = point_rng(seed, 0);
  return cast_inside(mesh, point, rng);
}

std::vector<std::uint8_t> classify_vertices(const CoveringGrid& grid, const SurfaceMesh& mesh, std::uint64_t seed) {
  const int nv = grid.num_vertices();
  std::vector<std::uint8_t> inside(nv, 0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
  for (int v = 0; v < nv; ++v) {
    try {
      auto rng = point_rng(seed, static_cast<std::uint64_t>(v));
      inside[v] = cast_inside(mesh, grid.vertex(v), rng) ? 1 : 0;
    } catch (...) {
#pragma omp critical(stokes_bie_classify_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return inside;
}

// ---------------------------------------------------------------------------
// Remainder field and its volume term

std::vector<GridField> remainder_fields(const CoveringGrid& grid, const std::vector<std::uint8_t>& inside,
                                        std::span<const ForceField> forces, const HarmonicExtension& extension,
                                        const PointQuadratureOptions& options) {
  if (static_cast<int>(inside.size()) != grid.num_vertices()) {
    throw std::invalid_argument("remainder_fields: inside flags do not match the grid");
  }
  const int ns = static_cast<int>(forces.size());
  if (extension.num_fields() < 3 * ns) {
    throw std::invalid_argument("remainder_fields: harmonic extension has too few columns");
  }
  std::vector<int> active;
  std::vector<Vec3> points;
  for (int v = 0; v < grid.num_vertices(); ++v) {
    if (inside[v]) {
      active.push_back(v);
      points.push_back(grid.vertex(v));
    }
  }
  const Eigen::MatrixXd f0 = extension.interior_values(points, options);
  std::vector<GridField> out(ns);
  for (int s = 0; s < ns; ++s) {
    out[s].grid = grid;
    out[s].inside = inside;
    out[s].values.assign(grid.num_vertices(), Vec3::Zero());
    for (std::size_t i = 0; i < active.size(); ++i) {
      const Vec3 harmonic = f0.row(static_cast<Eigen::Index>(i)).segment<3>(3 * s).transpose();
      out[s].values[active[i]] = forces[s](points[i]) - harmonic;
    }
  }
  return out;
}

GridField remainder_field(const CoveringGrid& grid, const std::vector<std::uint8_t>& inside, const ForceField& force,
                          const HarmonicExtension& extension, const PointQuadratureOptions& options) {
  return remainder_fields(grid, inside, std::span<const ForceField>(&force, 1), extension, options).front();
}

std::vector<Eigen::VectorXd> remainder_volume_rhs(const SurfaceMesh& mesh, std::span<const GridField> fields,
                                                  double mu, const RemainderOptions& options) {
  if (fields.empty()) return {};
  const CoveringGrid& grid = fields.front().grid;
  for (const auto& f : fields) {
    if (f.grid.cells != grid.cells || f.grid.lo != grid.lo || f.grid.hi != grid.hi ||
        static_cast<int>(f.values.size()) != grid.num_vertices()) {
      throw std::invalid_argument("remainder_volume_rhs: fields must share one grid");
    }
  }
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<std::vector<Vec3>> values(fields.size());
  for (int v = 0; v < grid.num_vertices(); ++v) {
    bool nonzero = false;
    for (const auto& f : fields) nonzero = nonzero || !f.values[v].isZero(0.0);
    if (options.skip_zero_vertices && !nonzero) continue;
    points.push_back(grid.vertex(v));
    weights.push_back(grid.vertex_weight(v));
    for (std::size_t s = 0; s < fields.size(); ++s) values[s].push_back(fields[s].values[v]);
  }
  return accumulate_moments(mesh, points, weights, values, mu, options.point);
}

Eigen::VectorXd remainder_volume_rhs(const SurfaceMesh& mesh, const GridField& field, double mu,
                                     const RemainderOptions& options) {
  return remainder_volume_rhs(mesh, std::span<const GridField>(&field, 1), mu, options).front();
}

// ---------------------------------------------------------------------------
// H boundary term

HOperators assemble_h_operators(const SurfaceMesh& mesh, double mu, const AssemblyOptions& options) {
  using Block36 = Eigen::Matrix<double, 3, 6>;
  const int n = mesh.num_nodes();
  const int ne = mesh.num_elements();
  HOperators ops;
  ops.mu = mu;
  ops.h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  ops.h_normal = Eigen::MatrixXd::Zero(3 * n, 3 * n);
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
              [nq, mu](const Vec3& P, const Vec3& Q) -> Block36 {
                const Vec3 R = Q - P;
                Block36 k;
                k << kernels::hfun_r(R, mu), kernels::hfun_normal_derivative_r(R, nq, mu);
                return k;
              },
              options.pair, options.point);
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              ops.h.block<3, 3>(3 * face_p[a], 3 * face_q[b]) += block[a][b].leftCols<3>();
              ops.h_normal.block<3, 3>(3 * face_p[a], 3 * face_q[b]) += block[a][b].rightCols<3>();
            }
          }
        } catch (const std::exception& err) {
#pragma omp critical(stokes_bie_h_failure)
          if (!failure) {
            std::ostringstream msg;
            msg << "H element pair (" << ep << ", " << eq << "): " << err.what();
            failure = std::make_exception_ptr(NumericalError(msg.str()));
          }
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return ops;
}

namespace {

Eigen::VectorXd stacked_columns(const Eigen::MatrixXd& nodal, int force_index) {
  const Eigen::Index n = nodal.rows();
  Eigen::VectorXd out(3 * n);
  for (Eigen::Index a = 0; a < n; ++a) out.segment<3>(3 * a) = nodal.row(a).segment<3>(3 * force_index).transpose();
  return out;
}

}  // namespace

Eigen::VectorXd h_boundary_rhs(const HOperators& ops, const HarmonicExtension& extension, int force_index) {
  if (force_index < 0 || 3 * force_index + 3 > extension.num_fields()) {
    throw std::invalid_argument("h_boundary_rhs: force index out of range");
  }
  const Eigen::VectorXd f0 = stacked_columns(extension.dirichlet(), force_index);
  const Eigen::VectorXd q = stacked_columns(extension.flux(), force_index);
  return ops.mu * (ops.h_normal * f0 - ops.h * q);
}

// ---------------------------------------------------------------------------
// Point evaluation

Vec3 remainder_potential_at(const GridField& field, const Vec3& point, double mu) {
  const CoveringGrid& grid = field.grid;
  const Vec3 h = grid.spacing();
  const double tiny = 1e-14 * h.norm();
  auto contribution = [&](const Vec3& Q, const Vec3& f) -> Vec3 {
    const Vec3 R = Q - point;
    if (R.norm() <= tiny) return Vec3::Zero();
    return kernels::stokeslet_r(R, mu) * f;
  };

  Vec3 total = Vec3::Zero();
  for (int v = 0; v < grid.num_vertices(); ++v) {
    if (field.values[v].isZero(0.0)) continue;
    total += grid.vertex_weight(v) * contribution(grid.vertex(v), field.values[v]);
  }

  // Replace the trapezoidal value of the cells around X by a subdivided Gauss rule.
  std::array<int, 3> c0{};
  for (int axis = 0; axis < 3; ++axis) {
    const int c = static_cast<int>(std::floor((point[axis] - grid.lo[axis]) / h[axis]));
    c0[axis] = std::clamp(c, 0, grid.cells[axis] - 1);
  }
  const LineRule& g = gauss_legendre(4);
  const double cell_vol = grid.cell_volume();
  for (int dk = -1; dk <= 1; ++dk) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int ci = c0[0] + di, cj = c0[1] + dj, ck = c0[2] + dk;
        if (ci < 0 || cj < 0 || ck < 0 || ci >= grid.cells[0] || cj >= grid.cells[1] || ck >= grid.cells[2]) continue;
        std::array<Vec3, 8> corner_value;
        bool any = false;
        for (int c = 0; c < 8; ++c) {
          const int v = grid.index(ci + (c & 1), cj + ((c >> 1) & 1), ck + ((c >> 2) & 1));
          corner_value[c] = field.values[v];
          any = any || !corner_value[c].isZero(0.0);
          total -= (cell_vol / 8.0) * contribution(grid.vertex(v), corner_value[c]);
        }
        if (!any) continue;
        const Vec3 origin = grid.vertex(ci, cj, ck);
        for (int sub = 0; sub < 8; ++sub) {
          const Vec3 sub_lo(0.5 * (sub & 1), 0.5 * ((sub >> 1) & 1), 0.5 * ((sub >> 2) & 1));
          for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
              for (int c = 0; c < 4; ++c) {
                const Vec3 t = sub_lo + 0.5 * Vec3(g.points[a], g.points[b], g.points[c]);
                Vec3 f = Vec3::Zero();
                for (int corner = 0; corner < 8; ++corner) {
                  const double wx = (corner & 1) ? t.x() : 1.0 - t.x();
                  const double wy = ((corner >> 1) & 1) ? t.y() : 1.0 - t.y();
                  const double wz = ((corner >> 2) & 1) ? t.z() : 1.0 - t.z();
                  f += wx * wy * wz * corner_value[corner];
                }
                const double w = g.weights[a] * g.weights[b] * g.weights[c] * cell_vol / 8.0;
                total += w * contribution(origin + t.cwiseProduct(h), f);
              }
            }
          }
        }
      }
    }
  }
  return total;
}

Vec3 volume_potential_at(const SurfaceMesh& mesh, const HarmonicExtension& extension, int force_index,
                         const GridField& field, const Vec3& point, double mu, const PointQuadratureOptions& options) {
  using Block36 = Eigen::Matrix<double, 3, 6>;
  Vec3 boundary = Vec3::Zero();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec3 n = mesh.element(e).normal;
    const auto parts = integrate_point_kernel(
        mesh.element(e), point,
        [&](const Vec3& Q) -> Block36 {
          const Vec3 R = Q - point;
          Block36 k;
          k << kernels::hfun_r(R, mu), kernels::hfun_normal_derivative_r(R, n, mu);
          return k;
        },
        options);
    const auto& f = mesh.face(e);
    for (int b = 0; b < 3; ++b) {
      const Vec3 f0 = extension.dirichlet().row(f[b]).segment<3>(3 * force_index).transpose();
      const Vec3 q = extension.flux().row(f[b]).segment<3>(3 * force_index).transpose();
      boundary += parts[b].rightCols<3>() * f0 - parts[b].leftCols<3>() * q;
    }
  }
  return mu * boundary + remainder_potential_at(field, point, mu);
}

Eigen::VectorXd brute_force_volume_rhs(const SurfaceMesh& mesh, const ForceField& force, double mu,
                                       const CoveringGrid& box, const PointQuadratureOptions& options) {
  const Vec3 h = box.spacing();
  const double vol = box.cell_volume();
  const int nc = box.cells[0] * box.cells[1] * box.cells[2];
  std::vector<std::uint8_t> inside(nc, 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (int c = 0; c < nc; ++c) {
    const int i = c % box.cells[0], j = (c / box.cells[0]) % box.cells[1], k = c / (box.cells[0] * box.cells[1]);
    auto rng = point_rng(977, static_cast<std::uint64_t>(c));
    inside[c] = cast_inside(mesh, box.lo + Vec3(i + 0.5, j + 0.5, k + 0.5).cwiseProduct(h), rng) ? 1 : 0;
  }
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<std::vector<Vec3>> values(1);
  for (int c = 0; c < nc; ++c) {
    if (!inside[c]) continue;
    const int i = c % box.cells[0], j = (c / box.cells[0]) % box.cells[1], k = c / (box.cells[0] * box.cells[1]);
    const Vec3 centre = box.lo + Vec3(i + 0.5, j + 0.5, k + 0.5).cwiseProduct(h);
    points.push_back(centre);
    weights.push_back(vol);
    values[0].push_back(force(centre));
  }
  return accumulate_moments(mesh, points, weights, values, mu, options).front();
}

void write_grid_field_csv(const GridField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grid field " + path.string());
  out << "i,j,k,inside,f_x,f_y,f_z\n" << std::setprecision(17);
  for (int v = 0; v < field.grid.num_vertices(); ++v) {
    const auto [i, j, k] = field.grid.ijk(v);
    const Vec3& f = field.values[v];
    out << i << ',' << j << ',' << k << ',' << int(field.inside[v]) << ',' << f.x() << ',' << f.y() << ',' << f.z()
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing grid field " + path.string());
}

}  // namespace stokes_bie
