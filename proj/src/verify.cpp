#include "stokes_bie/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "stokes_bie/harmonic.hpp"
#include "stokes_bie/kernels.hpp"

namespace stokes_bie {

namespace {

std::string format_number(double value) {
  std::ostringstream out;
  out.precision(10);
  out << value;
  return out.str();
}

std::string format_point(const Vec3& p) {
  return format_number(p.x()) + "," + format_number(p.y()) + "," + format_number(p.z());
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_number(values[i]);
  return out;
}

/// Seeded pair sampler: log-uniform distance, uniform direction.
class PairSampler {
 public:
  PairSampler(std::uint64_t seed, double r_min, double r_max) : rng_(seed), log_r_(std::log(r_min), std::log(r_max)) {
    if (!(r_min > 0.0) || !(r_max > r_min)) throw std::invalid_argument("sample distance range must satisfy 0 < r_min < r_max");
  }

  Vec3 separation() {
    Vec3 dir(gauss_(rng_), gauss_(rng_), gauss_(rng_));
    while (dir.norm() < 1e-8) dir = Vec3(gauss_(rng_), gauss_(rng_), gauss_(rng_));
    return std::exp(log_r_(rng_)) * dir.normalized();
  }
  Vec3 point() { return Vec3(box_(rng_), box_(rng_), box_(rng_)); }
  Vec3 unit() { return separation().normalized(); }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> log_r_;
  std::uniform_real_distribution<double> box_{-1.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

void require_samples(const IdentityCheckOptions& options) {
  if (options.samples < 1) throw std::invalid_argument("identity checks need at least one sample");
  if (!(options.step_factor > 0.0)) throw std::invalid_argument("finite-difference step factor must be positive");
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

Vec3 unit_axis(int m) {
  Vec3 e = Vec3::Zero();
  e[m] = 1.0;
  return e;
}

}  // namespace

bool VerificationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

void VerificationReport::merge(VerificationReport other) {
  for (auto& c : other.checks) checks.push_back(std::move(c));
  for (auto& t : other.tables) tables.push_back(std::move(t));
}

VerificationReport check_h_identities_3d(const IdentityCheckOptions& options) {
  require_samples(options);
  if (options.viscosities.empty()) throw std::invalid_argument("identity checks need at least one viscosity");
  for (double mu : options.viscosities) {
    if (!(mu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  }
  PairSampler sampler(options.seed, options.r_min, options.r_max);
  double worst_laplacian = 0.0;
  double worst_divergence = 0.0;
  for (int s = 0; s < options.samples; ++s) {
    const Vec3 P = sampler.point();
    const Vec3 R = sampler.separation();
    const Vec3 Q = P + R;
    const double h = options.step_factor * R.norm();
    for (double mu : options.viscosities) {
      auto H = [&](const Vec3& q) -> Mat3 { return options.h_scale * kernels::hfun(q, P, mu); };
      const Mat3 centre = H(Q);
      Mat3 laplacian = Mat3::Zero();
      Vec3 divergence = Vec3::Zero();
      for (int m = 0; m < 3; ++m) {
        const Mat3 plus = H(Q + h * unit_axis(m));
        const Mat3 minus = H(Q - h * unit_axis(m));
        laplacian += (plus - 2.0 * centre + minus) / (h * h);
        // d H_mj / d q_m summed over m
        divergence += ((plus - minus) / (2.0 * h)).row(m).transpose();
      }
      const Mat3 U = kernels::stokeslet(Q, P, mu);
      worst_laplacian = std::max(worst_laplacian, max_abs(mu * laplacian - U) / max_abs(U));
      worst_divergence = std::max(worst_divergence, divergence.cwiseAbs().maxCoeff() / U.norm());
    }
  }
  VerificationReport report;
  report.checks.push_back({"3d: mu Lap H - U (relative)", worst_laplacian, options.tolerance});
  report.checks.push_back({"3d: div H / |U|", worst_divergence, options.divergence_tolerance});
  return report;
}

VerificationReport check_h_identities_2d(const IdentityCheckOptions& options) {
  require_samples(options);
  PairSampler sampler(options.seed + 1, options.r_min, options.r_max);
  double worst_laplacian = 0.0;
  double worst_divergence = 0.0;
  for (int s = 0; s < options.samples; ++s) {
    const Vec3 p3 = sampler.point();
    const Vec3 r3 = sampler.separation();
    const Vec2 P(p3.x(), p3.y());
    // Planar direction with the sampled distance.
    Vec2 R(r3.x(), r3.y());
    if (R.norm() < 1e-3 * r3.norm()) R = Vec2(r3.norm(), 0.0);
    R *= r3.norm() / R.norm();
    const Vec2 Q = P + R;
    const double h = options.step_factor * R.norm();
    auto H = [&](const Vec2& q) -> Mat2 { return options.h_scale * kernels::hfun_2d(q, P); };
    const Mat2 centre = H(Q);
    Mat2 laplacian = Mat2::Zero();
    Vec2 divergence = Vec2::Zero();
    for (int m = 0; m < 2; ++m) {
      Vec2 e = Vec2::Zero();
      e[m] = h;
      const Mat2 plus = H(Q + e);
      const Mat2 minus = H(Q - e);
      laplacian += (plus - 2.0 * centre + minus) / (h * h);
      divergence += ((plus - minus) / (2.0 * h)).row(m).transpose();
    }
    const Mat2 U = kernels::stokeslet_2d(Q, P);
    const double scale = std::max(U.cwiseAbs().maxCoeff(), 1.0);
    worst_laplacian = std::max(worst_laplacian, (laplacian - U).cwiseAbs().maxCoeff() / scale);
    worst_divergence = std::max(worst_divergence, divergence.cwiseAbs().maxCoeff() / scale);
  }
  VerificationReport report;
  report.checks.push_back({"2d: Lap H - U (relative)", worst_laplacian, options.tolerance});
  report.checks.push_back({"2d: div H (relative)", worst_divergence, options.divergence_tolerance});
  return report;
}

VerificationReport check_kernel_derivatives(const IdentityCheckOptions& options) {
  require_samples(options);
  PairSampler sampler(options.seed + 2, options.r_min, options.r_max);
  const double mu = options.viscosities.empty() ? 1.0 : options.viscosities.front();
  double worst_u = 0.0, worst_t = 0.0, worst_h = 0.0, worst_hn = 0.0, worst_stress = 0.0, worst_traction = 0.0;
  for (int s = 0; s < options.samples; ++s) {
    const Vec3 P = sampler.point();
    const Vec3 R = sampler.separation();
    const Vec3 Q = P + R;
    const Vec3 n = sampler.unit();
    const double h = options.step_factor * R.norm();

    // Derivatives with respect to P.
    double u_err = 0.0, u_scale = 0.0, h_err = 0.0, h_scale = 0.0, t_err = 0.0, t_scale = 0.0;
    for (int m = 0; m < 3; ++m) {
      const Vec3 step = h * unit_axis(m);
      const Mat3 du = kernels::stokeslet_deriv(Q, P, mu, m);
      const Mat3 du_fd = (kernels::stokeslet(Q, P + step, mu) - kernels::stokeslet(Q, P - step, mu)) / (2.0 * h);
      u_err = std::max(u_err, max_abs(du - du_fd));
      u_scale = std::max(u_scale, max_abs(du));

      const Mat3 dh = options.h_scale * kernels::hfun_deriv(Q, P, mu, m);
      const Mat3 dh_fd = (kernels::hfun(Q, P + step, mu) - kernels::hfun(Q, P - step, mu)) / (2.0 * h);
      h_err = std::max(h_err, max_abs(dh - dh_fd));
      h_scale = std::max(h_scale, max_abs(dh_fd));

      const Tensor3 dt = kernels::stresslet_deriv(Q, P, m);
      const Tensor3 tp = kernels::stresslet(Q, P + step);
      const Tensor3 tm = kernels::stresslet(Q, P - step);
      for (int k = 0; k < 3; ++k) {
        const Mat3 fd = (tp.slice[k] - tm.slice[k]) / (2.0 * h);
        t_err = std::max(t_err, max_abs(dt.slice[k] - fd));
        t_scale = std::max(t_scale, max_abs(dt.slice[k]));
      }
    }
    worst_u = std::max(worst_u, u_err / u_scale);
    worst_h = std::max(worst_h, h_err / h_scale);
    worst_t = std::max(worst_t, t_err / t_scale);

    // Normal derivative of H in Q.
    const Mat3 hn = options.h_scale * kernels::hfun_normal_derivative(Q, P, n, mu);
    const Mat3 hn_fd = (kernels::hfun(Q + h * n, P, mu) - kernels::hfun(Q - h * n, P, mu)) / (2.0 * h);
    worst_hn = std::max(worst_hn, max_abs(hn - hn_fd) / max_abs(hn_fd));

    // Zero-pressure constitutive law for the H stress, column by column.
    const Tensor3 sigma = kernels::h_stress(Q, P, mu);
    double s_err = 0.0, s_scale = 0.0;
    for (int j = 0; j < 3; ++j) {
      Mat3 grad;  // grad(k, l) = d u_kj / d q_l
      for (int l = 0; l < 3; ++l) {
        const Vec3 step = h * unit_axis(l);
        grad.col(l) = (kernels::h_velocity(Q + step, P, mu, j) - kernels::h_velocity(Q - step, P, mu, j)) / (2.0 * h);
      }
      const Mat3 expected = mu * (grad + grad.transpose());
      for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) {
          s_err = std::max(s_err, std::abs(sigma(k, j, l) - expected(k, l)));
          s_scale = std::max(s_scale, std::abs(expected(k, l)));
        }
      }
    }
    worst_stress = std::max(worst_stress, s_err / s_scale);

    // Point-source traction against mu (grad u + grad u^T) n - p n.
    for (int c = 0; c < 3; ++c) {
      Mat3 grad;
      for (int l = 0; l < 3; ++l) {
        const Vec3 step = h * unit_axis(l);
        grad.col(l) = (kernels::point_source_velocity(Q + step, P, mu, c) -
                       kernels::point_source_velocity(Q - step, P, mu, c)) /
                      (2.0 * h);
      }
      const Vec3 expected = mu * (grad + grad.transpose()) * n - kernels::stokeslet_pressure(Q, P, c) * n;
      const Vec3 traction = kernels::point_source_traction(Q, P, n, c);
      const double scale = std::max(expected.cwiseAbs().maxCoeff(), kernels::stresslet(Q, P).slice[c].cwiseAbs().maxCoeff());
      worst_traction = std::max(worst_traction, (traction - expected).cwiseAbs().maxCoeff() / scale);
    }
  }
  VerificationReport report;
  report.checks.push_back({"d/dP Stokeslet vs FD (relative)", worst_u, options.tolerance});
  report.checks.push_back({"d/dP stresslet vs FD (relative)", worst_t, options.tolerance});
  report.checks.push_back({"d/dP H vs FD (relative)", worst_h, options.tolerance});
  report.checks.push_back({"dH/dn vs FD (relative)", worst_hn, options.tolerance});
  report.checks.push_back({"H stress vs zero-pressure constitutive law (relative)", worst_stress, options.tolerance});
  report.checks.push_back({"point-source traction vs constitutive law (relative)", worst_traction, options.tolerance});
  return report;
}

VerificationReport run_identity_suite(const IdentityCheckOptions& options) {
  VerificationReport report = check_h_identities_3d(options);
  report.merge(check_h_identities_2d(options));
  report.merge(check_kernel_derivatives(options));
  return report;
}

// ---------------------------------------------------------------------------
// Reference magnitudes

std::optional<ReferenceMesh> comparable_reference_mesh(int num_elements) {
  if (std::abs(num_elements - 376) <= 0.25 * 376) return ReferenceMesh::coarse;
  if (std::abs(num_elements - 1504) <= 0.25 * 1504) return ReferenceMesh::fine;
  return std::nullopt;
}

namespace {

using Triple = std::array<double, 3>;

struct BoundaryReference {
  DomainKind domain;
  bool body_force;
  Vec3 source;
  Triple u_coarse, tau_coarse, u_fine, tau_fine;
};

const std::vector<BoundaryReference>& boundary_references() {
  static const std::vector<BoundaryReference> table{
      {DomainKind::interior, false, {-2.0, 0.0, 0.0},
       {1.094e-4, 5.670e-5, 3.634e-5}, {5.520e-4, 2.042e-4, 2.347e-4},
       {3.796e-5, 1.409e-5, 7.812e-6}, {2.214e-4, 7.840e-5, 9.376e-5}},
      {DomainKind::interior, false, {1.5, 0.0, 0.0},
       {2.487e-4, 8.597e-5, 1.320e-4}, {1.515e-3, 1.327e-3, 1.136e-3},
       {6.050e-5, 1.985e-5, 2.009e-5}, {4.502e-4, 2.751e-4, 2.504e-4}},
      {DomainKind::exterior, false, {0.0, 0.7, 0.0},
       {1.964e-3, 1.749e-3, 3.412e-3}, {1.468e-2, 1.530e-2, 1.152e-2},
       {4.472e-5, 3.674e-5, 4.184e-5}, {7.571e-4, 6.693e-4, 5.617e-4}},
      {DomainKind::exterior, false, {0.0, 0.0, 0.8},
       {8.042e-4, 7.977e-4, 1.458e-3}, {4.614e-2, 1.222e-2, 2.792e-2},
       {2.281e-5, 1.991e-5, 4.091e-5}, {5.633e-3, 2.772e-3, 5.118e-3}},
      {DomainKind::interior, true, {2.0, 0.0, 0.0},
       {2.815e-4, 3.495e-5, 8.432e-5}, {6.332e-4, 2.033e-4, 3.076e-4},
       {7.382e-5, 8.187e-6, 1.908e-5}, {2.199e-4, 7.934e-5, 1.016e-4}},
      {DomainKind::interior, true, {1.5, 0.0, 0.0},
       {3.314e-4, 3.644e-5, 1.039e-4}, {6.721e-4, 2.400e-4, 3.604e-4},
       {8.111e-5, 8.700e-6, 2.392e-5}, {2.165e-4, 8.181e-5, 1.512e-4}},
      {DomainKind::interior, true, {0.0, 1.3, 0.0},
       {2.579e-4, 2.300e-5, 5.769e-4}, {5.881e-4, 2.913e-4, 2.790e-4},
       {6.686e-5, 7.441e-6, 1.336e-5}, {2.010e-4, 9.461e-5, 8.569e-5}},
      {DomainKind::interior, true, {0.0, 0.0, 1.2},
       {1.643e-4, 1.322e-5, 5.353e-5}, {6.246e-4, 1.984e-4, 3.690e-4},
       {5.299e-5, 3.347e-6, 1.315e-5}, {2.043e-4, 7.412e-5, 1.100e-4}},
  };
  return table;
}

/// Indexed [m][k] for u_{k,m}.
using GradientBlock = std::array<Triple, 3>;

struct GradientReference {
  GradientProblem problem;
  GradientBlock coarse, fine;
};

const std::vector<GradientReference>& gradient_references() {
  static const std::vector<GradientReference> table{
      {GradientProblem::a,
       {{{1.002e-4, 6.311e-5, 6.833e-5}, {5.547e-5, 5.718e-5, 3.893e-5}, {6.335e-5, 4.120e-5, 5.443e-5}}},
       {{{1.817e-5, 1.199e-5, 1.400e-5}, {9.240e-6, 1.116e-5, 7.820e-6}, {9.940e-6, 8.053e-6, 1.168e-5}}}},
      {GradientProblem::b,
       {{{4.428e-4, 6.620e-4, 3.751e-4}, {1.046e-3, 5.296e-4, 4.392e-4}, {5.526e-4, 4.901e-4, 4.443e-4}}},
       {{{3.957e-5, 5.462e-5, 3.926e-5}, {4.657e-5, 3.758e-5, 3.472e-5}, {2.818e-5, 3.620e-5, 2.649e-5}}}},
      {GradientProblem::c,
       {{{1.135e-4, 6.056e-5, 6.881e-5}, {4.324e-5, 5.383e-5, 3.878e-5}, {5.934e-5, 3.758e-5, 5.362e-5}}},
       {{{2.187e-5, 1.251e-5, 1.435e-5}, {9.990e-6, 1.094e-5, 8.033e-6}, {1.198e-5, 7.676e-6, 1.114e-5}}}},
  };
  return table;
}

std::optional<std::pair<Triple, Triple>> boundary_reference(const SurfaceMesh& mesh, DomainKind domain,
                                                            bool body_force, const Vec3& source, double mu) {
  const auto level = comparable_reference_mesh(mesh.num_elements());
  if (!level || mu != 1.0) return std::nullopt;
  for (const auto& ref : boundary_references()) {
    if (ref.domain == domain && ref.body_force == body_force && (ref.source - source).norm() < 1e-12) {
      return *level == ReferenceMesh::coarse ? std::make_pair(ref.u_coarse, ref.tau_coarse)
                                             : std::make_pair(ref.u_fine, ref.tau_fine);
    }
  }
  return std::nullopt;
}

void record_assembly(TableRun& run, const SurfaceMesh& mesh, const AssemblyOptions& assembly, double mu) {
  run.set("elements", std::to_string(mesh.num_elements()));
  run.set("nodes", std::to_string(mesh.num_nodes()));
  run.set("mu", format_number(mu));
  run.set("far_degree", std::to_string(assembly.pair.far_degree));
  run.set("regular_degree", std::to_string(assembly.pair.regular_degree));
  run.set("near_degree", std::to_string(assembly.pair.near_degree));
  run.set("singular_order", std::to_string(assembly.pair.singular_order));
  run.set("vertex_order", std::to_string(assembly.pair.vertex_order));
  run.set("point_degree", std::to_string(assembly.point.degree));
}

void add_boundary_rows(TableRun& run, const SurfaceMesh& mesh, const BoundarySolution& solution, const NodalField& u_exact,
                       const NodalField& tau_exact, const std::optional<std::pair<Triple, Triple>>& reference) {
  const Vec3 u_err = mean_square_error(solution.velocity, u_exact);
  const Vec3 tau_err = mean_square_error(solution.traction, tau_exact);
  const char* axes[] = {"x", "y", "z"};
  for (int c = 0; c < 3; ++c) run.table.add("u", axes[c], u_err[c], reference ? reference->first[c] : 0.0);
  for (int c = 0; c < 3; ++c) run.table.add("tau", axes[c], tau_err[c], reference ? reference->second[c] : 0.0);
  if (reference) {
    run.set("reference_mesh",
            comparable_reference_mesh(mesh.num_elements()) == ReferenceMesh::coarse ? "376" : "1504");
  }
}

struct PointSourceSolution {
  BoundarySolution solution;
  NodalField u_exact, tau_exact;
};

PointSourceSolution solve_point_source(const SurfaceMesh& mesh, DomainKind domain, const Vec3& source, double mu,
                                       const AssemblyOptions& assembly) {
  if (!(mu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (distance_to_surface(mesh, source) < 1e-6 || (domain == DomainKind::interior) == point_inside(mesh, source)) {
    throw std::invalid_argument("point source must lie outside the fluid domain and off the surface");
  }
  auto ops = std::make_shared<BoundaryOperators>(assemble_operators(mesh, mu, assembly));
  const double sign = fluid_sign(domain);
  PointSourceSolution out;
  out.u_exact.resize(mesh.num_nodes());
  out.tau_exact.resize(mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    out.u_exact[a] = kernels::point_source_velocity(mesh.vertex(a), source, mu, 0);
    out.tau_exact[a] = kernels::point_source_traction(mesh.vertex(a), source, sign * mesh.node_normals()[a], 0);
  }
  const auto bc = MixedBC::split_by_plane(
      mesh, domain, [&](int a) { return out.u_exact[a]; }, [&](int a) { return out.tau_exact[a]; });
  out.solution = solve_mixed(ops, bc);
  return out;
}

struct BodyForceSolution {
  BoundarySolution solution;
  ForceField force;
  NodalField u_exact, tau_exact;
  Eigen::VectorXd volume_rhs;
  int inside_vertices = 0;
};

BodyForceSolution solve_body_force(const SurfaceMesh& mesh, const Vec3& source, double mu, double half_width,
                                   int cells, std::uint64_t seed, const AssemblyOptions& assembly,
                                   const RemainderOptions& remainder) {
  if (!(mu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (cells < 1) throw std::invalid_argument("grid needs at least one cell per axis");
  if (point_inside(mesh, source) || distance_to_surface(mesh, source) < 1e-6) {
    throw std::invalid_argument("body-force centre must lie outside the domain");
  }
  const CoveringGrid grid = build_grid(half_width, cells);
  require_contains(grid, mesh);

  auto ops = std::make_shared<BoundaryOperators>(assemble_operators(mesh, mu, assembly));
  const LaplaceOperators laplace = assemble_laplace_operators(mesh, assembly);
  const HOperators h_ops = assemble_h_operators(mesh, mu, assembly);

  BodyForceSolution out;
  out.force = [source, mu](const Vec3& q) { return Vec3(kernels::stokeslet(q, source, mu).col(0)); };
  Eigen::MatrixXd dirichlet(mesh.num_nodes(), 3);
  for (int a = 0; a < mesh.num_nodes(); ++a) dirichlet.row(a) = out.force(mesh.vertex(a)).transpose();
  const HarmonicExtension extension(mesh, laplace, dirichlet);

  const auto inside = classify_vertices(grid, mesh, seed);
  out.inside_vertices = static_cast<int>(std::count(inside.begin(), inside.end(), 1));
  const GridField field = remainder_field(grid, inside, out.force, extension, remainder.point);
  out.volume_rhs = h_boundary_rhs(h_ops, extension, 0) + remainder_volume_rhs(mesh, field, mu, remainder);

  out.u_exact.resize(mesh.num_nodes());
  out.tau_exact.resize(mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    out.u_exact[a] = kernels::h_velocity(mesh.vertex(a), source, mu, 0);
    out.tau_exact[a] = kernels::h_traction(mesh.vertex(a), source, mesh.node_normals()[a], mu, 0);
  }
  const auto bc = MixedBC::split_by_plane(
      mesh, DomainKind::interior, [&](int a) { return out.u_exact[a]; }, [&](int a) { return out.tau_exact[a]; });
  out.solution = solve_mixed(ops, bc, out.volume_rhs);
  return out;
}

}  // namespace

TableRun run_homogeneous_test(const SurfaceMesh& mesh, const HomogeneousProblem& problem) {
  const auto solved = solve_point_source(mesh, problem.domain, problem.source, problem.mu, problem.assembly);
  TableRun run;
  run.table.name = std::string("homogeneous ") + to_string(problem.domain) + " source " + format_point(problem.source);
  run.set("problem", "homogeneous");
  run.set("domain", to_string(problem.domain));
  run.set("source", format_point(problem.source));
  record_assembly(run, mesh, problem.assembly, problem.mu);
  run.set("reciprocal_condition", format_number(solved.solution.reciprocal_condition));
  add_boundary_rows(run, mesh, solved.solution, solved.u_exact, solved.tau_exact,
                    boundary_reference(mesh, problem.domain, false, problem.source, problem.mu));
  return run;
}

TableRun run_nonhomogeneous_test(const SurfaceMesh& mesh, const NonhomogeneousProblem& problem) {
  const auto solved = solve_body_force(mesh, problem.source, problem.mu, problem.box_half_width, problem.grid_cells,
                                       problem.seed, problem.assembly, problem.remainder);
  TableRun run;
  run.table.name = "nonhomogeneous interior source " + format_point(problem.source);
  run.set("problem", "nonhomogeneous");
  run.set("domain", "interior");
  run.set("source", format_point(problem.source));
  record_assembly(run, mesh, problem.assembly, problem.mu);
  run.set("grid", std::to_string(problem.grid_cells));
  run.set("box_half_width", format_number(problem.box_half_width));
  run.set("inside_vertices", std::to_string(solved.inside_vertices));
  run.set("seed", std::to_string(problem.seed));
  run.set("reciprocal_condition", format_number(solved.solution.reciprocal_condition));
  add_boundary_rows(run, mesh, solved.solution, solved.u_exact, solved.tau_exact,
                    boundary_reference(mesh, DomainKind::interior, true, problem.source, problem.mu));
  return run;
}

CheckResult check_volume_split(const SurfaceMesh& mesh, const NonhomogeneousProblem& problem, int brute_cells,
                               double tolerance) {
  const auto solved = solve_body_force(mesh, problem.source, problem.mu, problem.box_half_width, problem.grid_cells,
                                       problem.seed, problem.assembly, problem.remainder);
  const Eigen::VectorXd brute = brute_force_volume_rhs(mesh, solved.force, problem.mu,
                                                       build_grid(problem.box_half_width, brute_cells),
                                                       problem.remainder.point);
  return {"volume split vs " + std::to_string(brute_cells) + "^3 midpoint (relative RHS norm)",
          (solved.volume_rhs - brute).norm() / brute.norm(), tolerance};
}

VerificationReport check_double_layer_identity(const SurfaceMesh& mesh, std::span<const Vec3> inside_points,
                                               std::span<const Vec3> outside_points, double tolerance,
                                               const AssemblyOptions& assembly) {
  const BoundaryOperators ops = assemble_operators(mesh, 1.0, assembly);
  double inside_rows = 0.0;
  for (const Mat3& m : double_layer_row_identity(ops, 0.5)) {
    inside_rows = std::max(inside_rows, (m - Mat3::Identity()).cwiseAbs().maxCoeff());
  }
  double outside_rows = 0.0;
  for (const Mat3& m : double_layer_row_identity(ops, -0.5)) outside_rows = std::max(outside_rows, m.cwiseAbs().maxCoeff());
  double inside_potential = 0.0;
  for (const Vec3& x : inside_points) {
    inside_potential = std::max(inside_potential, (double_layer_constant(mesh, x) - Mat3::Identity()).cwiseAbs().maxCoeff());
  }
  double outside_potential = 0.0;
  for (const Vec3& x : outside_points) {
    outside_potential = std::max(outside_potential, double_layer_constant(mesh, x).cwiseAbs().maxCoeff());
  }
  VerificationReport report;
  report.checks.push_back({"assembled double layer, inside limit vs identity", inside_rows, tolerance});
  report.checks.push_back({"assembled double layer, outside limit vs zero", outside_rows, tolerance});
  if (!inside_points.empty()) report.checks.push_back({"double layer at inside points vs identity", inside_potential, tolerance});
  if (!outside_points.empty()) report.checks.push_back({"double layer at outside points vs zero", outside_potential, tolerance});
  return report;
}

std::string to_string(GradientProblem problem) {
  switch (problem) {
    case GradientProblem::a:
      return "a";
    case GradientProblem::b:
      return "b";
    case GradientProblem::c:
      return "c";
  }
  return "?";
}

GradientProblem parse_gradient_problem(const std::string& text) {
  if (text == "a") return GradientProblem::a;
  if (text == "b") return GradientProblem::b;
  if (text == "c") return GradientProblem::c;
  throw std::invalid_argument("unknown gradient problem '" + text + "' (expected a, b or c)");
}

GradientTestResult run_gradient_test(const SurfaceMesh& mesh, GradientProblem problem,
                                     const GradientTestOptions& options) {
  GradientTestResult result;
  const double mu = options.mu;
  Vec3 source;
  std::function<Mat3(const Vec3&)> exact;
  if (problem == GradientProblem::c) {
    source = Vec3(0.0, 0.0, 1.2);
    auto solved = solve_body_force(mesh, source, mu, options.box_half_width, options.grid_cells, options.seed,
                                   options.assembly, RemainderOptions{options.assembly.point, true});
    result.solution = std::move(solved.solution);
    result.force = std::move(solved.force);
    exact = [source, mu](const Vec3& q) {
      Mat3 g;
      for (int m = 0; m < 3; ++m) g.col(m) = -kernels::hfun_deriv(q, source, mu, m).col(0);
      return g;
    };
  } else {
    const DomainKind domain = problem == GradientProblem::a ? DomainKind::interior : DomainKind::exterior;
    source = problem == GradientProblem::a ? Vec3(2.0, 0.0, 0.0) : Vec3(0.0, 0.7, 0.0);
    result.solution = solve_point_source(mesh, domain, source, mu, options.assembly).solution;
    exact = [source, mu](const Vec3& q) {
      Mat3 g;
      for (int m = 0; m < 3; ++m) g.col(m) = -kernels::stokeslet_deriv(q, source, mu, m).col(0);
      return g;
    };
  }

  const GradientRhs rhs = limit_difference_rhs(mesh, result.solution, options.gradient);
  result.gradients = solve_gradients(result.solution.operators->mass, rhs);
  result.extrapolation_residual = rhs.extrapolation_residual;

  const int n = mesh.num_nodes();
  std::vector<Mat3> exact_values(n);
  for (int a = 0; a < n; ++a) exact_values[a] = exact(mesh.vertex(a));

  const auto level = comparable_reference_mesh(mesh.num_elements());
  const GradientBlock* reference = nullptr;
  if (level && mu == 1.0) {
    for (const auto& ref : gradient_references()) {
      if (ref.problem == problem) reference = *level == ReferenceMesh::coarse ? &ref.coarse : &ref.fine;
    }
  }

  TableRun& run = result.run;
  run.table.name = "boundary gradient problem " + to_string(problem);
  run.set("problem", "gradient-" + to_string(problem));
  run.set("domain", problem == GradientProblem::b ? "exterior" : "interior");
  run.set("source", format_point(source));
  record_assembly(run, mesh, options.assembly, mu);
  if (problem == GradientProblem::c) {
    run.set("grid", std::to_string(options.grid_cells));
    run.set("box_half_width", format_number(options.box_half_width));
    run.set("seed", std::to_string(options.seed));
  }
  run.set("eps_schedule", format_list(options.gradient.eps_schedule));
  run.set("richardson_power", std::to_string(options.gradient.richardson_power));
  run.set("outer_degree", std::to_string(options.gradient.outer_degree));
  run.set("extrapolation_residual", format_number(result.extrapolation_residual));
  if (reference) run.set("reference_mesh", *level == ReferenceMesh::coarse ? "376" : "1504");

  for (int m = 0; m < 3; ++m) {
    for (int k = 0; k < 3; ++k) {
      std::vector<double> exact_component(n);
      for (int a = 0; a < n; ++a) exact_component[a] = exact_values[a](k, m);
      const double error = mean_square_error(result.gradients.component(k, m), exact_component);
      run.table.add("grad_u", "u" + std::to_string(k + 1) + "," + std::to_string(m + 1), error,
                    reference ? (*reference)[m][k] : 0.0);
    }
  }
  const auto div = divergence(result.gradients);
  const std::vector<double> zeros(n, 0.0);
  result.divergence_error = mean_square_error(div, zeros);
  run.set("divergence_mean_square", format_number(result.divergence_error));
  return result;
}

double gradient_difference(const GradientField& first, const GradientField& second) {
  if (first.values.size() != second.values.size()) throw std::invalid_argument("gradient fields differ in size");
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int m = 0; m < 3; ++m) worst = std::max(worst, mean_square_error(first.component(k, m), second.component(k, m)));
  }
  return worst;
}

}  // namespace stokes_bie
