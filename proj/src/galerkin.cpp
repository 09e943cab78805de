#include "stokes_bie/galerkin.hpp"

#include <exception>
#include <numbers>
#include <sstream>

#include "stokes_bie/kernels.hpp"

namespace stokes_bie {

namespace {

using Block36 = Eigen::Matrix<double, 3, 6>;

constexpr double kThreeOverFourPi = 3.0 / (4.0 * std::numbers::pi);

/// (3 / 4 pi) R R^T (R.n) / r^5, the double-layer kernel acting on velocity.
Mat3 double_layer_kernel(const Vec3& R, const Vec3& n) {
  const double r2 = R.squaredNorm();
  const double r5 = r2 * r2 * std::sqrt(r2);
  return (kThreeOverFourPi * R.dot(n) / r5) * (R * R.transpose());
}

Block36 combined_kernel(const Vec3& R, const Vec3& n, double mu) {
  Block36 k;
  k.leftCols<3>() = kernels::stokeslet_r(R, mu);
  k.rightCols<3>() = double_layer_kernel(R, n);
  return k;
}

void add_block(Eigen::MatrixXd& m, int row_node, int col_node, const Mat3& b) {
  m.block<3, 3>(3 * row_node, 3 * col_node) += b;
}

}  // namespace

std::vector<std::vector<int>> color_elements(const SurfaceMesh& mesh) {
  std::vector<std::vector<int>> colors;
  std::vector<std::vector<char>> node_used;  // per colour, node occupancy
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& f = mesh.face(e);
    std::size_t c = 0;
    for (; c < colors.size(); ++c) {
      if (!node_used[c][f[0]] && !node_used[c][f[1]] && !node_used[c][f[2]]) break;
    }
    if (c == colors.size()) {
      colors.emplace_back();
      node_used.emplace_back(mesh.num_nodes(), 0);
    }
    colors[c].push_back(e);
    for (int v : f) node_used[c][v] = 1;
  }
  return colors;
}

Eigen::MatrixXd expanded_mass(const Eigen::SparseMatrix<double>& mass) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * mass.rows(), 3 * mass.cols());
  for (int col = 0; col < mass.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mass, col); it; ++it) {
      for (int k = 0; k < 3; ++k) m(3 * it.row() + k, 3 * it.col() + k) = it.value();
    }
  }
  return m;
}

Eigen::MatrixXd BoundaryOperators::exterior_limit(DomainKind domain) const {
  return fluid_sign(domain) * double_layer - 0.5 * expanded_mass(mass);
}

Eigen::MatrixXd BoundaryOperators::interior_limit(DomainKind domain) const {
  return fluid_sign(domain) * double_layer + 0.5 * expanded_mass(mass);
}

BoundaryOperators assemble_operators(const SurfaceMesh& mesh, double mu, const AssemblyOptions& options) {
  if (!(mu > 0.0)) throw std::invalid_argument("assemble_operators: viscosity must be positive");
  const int n = mesh.num_nodes();
  const int ne = mesh.num_elements();
  BoundaryOperators ops;
  ops.mu = mu;
  ops.single_layer = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  ops.double_layer_raw = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  ops.mass = mass_matrix(mesh);
  ops.lumped_mass = ops.mass * Eigen::VectorXd::Ones(n);

  std::exception_ptr failure;
  for (const auto& color : color_elements(mesh)) {
    const int count = static_cast<int>(color.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int idx = 0; idx < count; ++idx) {
      const int ep = color[idx];
      const auto& face_p = mesh.face(ep);
      const Triangle& tri_p = mesh.element(ep);
      for (int eq = 0; eq < ne; ++eq) {
        const auto& face_q = mesh.face(eq);
        const Triangle& tri_q = mesh.element(eq);
        const PairMapping mapping = classify_pair(face_p, face_q);
        try {
          std::array<std::array<Block36, 3>, 3> block;
          if (mapping.configuration == PairConfiguration::coincident) {
            // The double-layer kernel vanishes on a flat element.
            const auto single = galerkin_pair_integral(
                tri_p, tri_q, mapping,
                [mu](const Vec3& P, const Vec3& Q) -> Mat3 { return kernels::stokeslet_r(Q - P, mu); },
                options.pair, options.point);
            for (int a = 0; a < 3; ++a) {
              for (int b = 0; b < 3; ++b) block[a][b] << single[a][b], Mat3::Zero();
            }
          } else {
            const Vec3 nq = tri_q.normal;
            block = galerkin_pair_integral(
                tri_p, tri_q, mapping,
                [mu, nq](const Vec3& P, const Vec3& Q) -> Block36 { return combined_kernel(Q - P, nq, mu); },
                options.pair, options.point);
          }
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              if (!block[a][b].allFinite()) throw NumericalError("non-finite pair integral");
              add_block(ops.single_layer, face_p[a], face_q[b], block[a][b].leftCols<3>());
              add_block(ops.double_layer_raw, face_p[a], face_q[b], block[a][b].rightCols<3>());
            }
          }
        } catch (const std::exception& err) {
#pragma omp critical(stokes_bie_assembly_failure)
          if (!failure) {
            std::ostringstream msg;
            msg << "element pair (" << ep << ", " << eq << "): " << err.what();
            failure = std::make_exception_ptr(NumericalError(msg.str()));
          }
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  ops.double_layer = ops.double_layer_raw;
  for (int a = 0; a < n; ++a) {
    Mat3 off = Mat3::Zero();
    for (int b = 0; b < n; ++b) {
      if (b != a) off += ops.double_layer_raw.block<3, 3>(3 * a, 3 * b);
    }
    ops.double_layer.block<3, 3>(3 * a, 3 * a) = 0.5 * ops.lumped_mass[a] * Mat3::Identity() - off;
  }
  return ops;
}

void MixedBC::validate(int num_nodes) const {
  if (static_cast<int>(nodes.size()) != num_nodes) {
    throw std::invalid_argument("boundary conditions cover " + std::to_string(nodes.size()) + " nodes, mesh has " +
                                std::to_string(num_nodes));
  }
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (!nodes[a].value.allFinite()) {
      throw std::invalid_argument("non-finite boundary value at node " + std::to_string(a));
    }
  }
}

MixedBC MixedBC::split_by_plane(const SurfaceMesh& mesh, DomainKind domain, const std::function<Vec3(int)>& velocity,
                                const std::function<Vec3(int)>& traction, int axis, double threshold) {
  const double slack = 1e-12 * mesh.bbox_diagonal();
  MixedBC bc;
  bc.domain = domain;
  bc.nodes.resize(mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    if (mesh.vertex(a)[axis] >= threshold - slack) {
      bc.nodes[a] = {NodeCondition::Kind::velocity, velocity(a)};
    } else {
      bc.nodes[a] = {NodeCondition::Kind::traction, traction(a)};
    }
  }
  return bc;
}

BoundarySolution solve_mixed(std::shared_ptr<const BoundaryOperators> operators, const MixedBC& bc,
                             const Eigen::VectorXd& volume_rhs) {
  if (!operators) throw std::invalid_argument("solve_mixed: operators not assembled");
  const BoundaryOperators& ops = *operators;
  const int n = ops.num_nodes();
  bc.validate(n);
  if (volume_rhs.size() != 0 && volume_rhs.size() != 3 * n) {
    throw std::invalid_argument("solve_mixed: volume right-hand side has length " + std::to_string(volume_rhs.size()) +
                                ", expected " + std::to_string(3 * n));
  }

  const Eigen::MatrixXd limit = ops.exterior_limit(bc.domain);
  Eigen::MatrixXd system(3 * n, 3 * n);
  Eigen::VectorXd rhs = volume_rhs.size() ? volume_rhs : Eigen::VectorXd::Zero(3 * n);
  for (int b = 0; b < n; ++b) {
    const auto& cond = bc.nodes[b];
    const bool velocity_known = cond.kind == NodeCondition::Kind::velocity;
    const Eigen::MatrixXd& unknown_op = velocity_known ? ops.single_layer : limit;
    const Eigen::MatrixXd& known_op = velocity_known ? limit : ops.single_layer;
    system.middleCols<3>(3 * b) = unknown_op.middleCols<3>(3 * b);
    rhs.noalias() -= known_op.middleCols<3>(3 * b) * cond.value;
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "mixed boundary system is singular (condition estimate " << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalError("mixed boundary solve produced non-finite values");

  BoundarySolution sol;
  sol.domain = bc.domain;
  sol.velocity.resize(n);
  sol.traction.resize(n);
  sol.velocity_prescribed.resize(n);
  sol.operators = std::move(operators);
  sol.reciprocal_condition = rcond;
  for (int a = 0; a < n; ++a) {
    const auto& cond = bc.nodes[a];
    const Vec3 unknown = x.segment<3>(3 * a);
    if (cond.kind == NodeCondition::Kind::velocity) {
      sol.velocity[a] = cond.value;
      sol.traction[a] = unknown;
      sol.velocity_prescribed[a] = true;
    } else {
      sol.velocity[a] = unknown;
      sol.traction[a] = cond.value;
      sol.velocity_prescribed[a] = false;
    }
  }
  return sol;
}

Vec3 boundary_representation(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                             const PointQuadratureOptions& options) {
  const double sign = fluid_sign(solution.domain);
  const double mu = solution.operators ? solution.operators->mu : 1.0;
  Vec3 total = Vec3::Zero();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Triangle& tri = mesh.element(e);
    const Vec3 n = tri.normal;
    const auto parts = integrate_point_kernel(
        tri, point, [&](const Vec3& Q) -> Block36 { return combined_kernel(Q - point, n, mu); }, options);
    const auto& f = mesh.face(e);
    for (int b = 0; b < 3; ++b) {
      total += parts[b].leftCols<3>() * solution.traction[f[b]] + sign * parts[b].rightCols<3>() * solution.velocity[f[b]];
    }
  }
  return total;
}

Vec3 interior_velocity(const SurfaceMesh& mesh, const BoundarySolution& solution, const Vec3& point,
                       const Vec3& volume_potential, const PointQuadratureOptions& options) {
  const double d = distance_to_surface(mesh, point);
  if (d < 1e-6) {
    throw std::invalid_argument("interior_velocity: point lies within 1e-6 of the surface (distance " +
                                std::to_string(d) + ")");
  }
  return boundary_representation(mesh, solution, point, options) - volume_potential;
}

std::vector<Mat3> double_layer_row_identity(const BoundaryOperators& ops, double free_term) {
  const int n = ops.num_nodes();
  std::vector<Mat3> rows(n, Mat3::Zero());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) rows[a] += ops.double_layer_raw.block<3, 3>(3 * a, 3 * b);
    rows[a] = rows[a] / ops.lumped_mass[a] + free_term * Mat3::Identity();
  }
  return rows;
}

Mat3 double_layer_constant(const SurfaceMesh& mesh, const Vec3& point, const PointQuadratureOptions& options) {
  Mat3 total = Mat3::Zero();
  for (const auto& tri : mesh.elements()) {
    const Vec3 n = tri.normal;
    const auto parts = integrate_point_kernel(
        tri, point, [&](const Vec3& Q) -> Mat3 { return double_layer_kernel(Q - point, n); }, options);
    total += parts[0] + parts[1] + parts[2];
  }
  return total;
}

}  // namespace stokes_bie
