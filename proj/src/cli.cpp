#include "stokes_bie/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

#include "stokes_bie/report.hpp"
#include "stokes_bie/verify.hpp"

namespace stokes_bie {

namespace {

constexpr int kMaxSubdivisions = 6;

struct RunConfig {
  std::string command;
  int threads = 0;
  std::uint64_t seed = 12345;

  int samples = 100;
  double h_scale = 1.0;

  std::string domain_case = "interior";
  std::string source_text;
  int subdiv = 2;
  std::string mesh_path;
  double mu = 1.0;
  int grid = 40;
  double box = 1.1;
  std::string problem = "a";
  std::string suite;
  std::vector<int> subdivs{1, 2, 3};
  std::vector<double> eps{0.5, 0.25, 0.125};
  int power = 1;
  double min_decay = 0.0;

  std::string out_path;
  std::string json_path;
  std::string csv_path;
};

std::optional<Vec3> parse_point(const std::string& text) {
  std::istringstream in(text);
  Vec3 p;
  char comma1 = 0, comma2 = 0;
  if (!(in >> p.x() >> comma1 >> p.y() >> comma2 >> p.z()) || comma1 != ',' || comma2 != ',') return std::nullopt;
  in >> std::ws;
  if (!in.eof() || !p.allFinite()) return std::nullopt;
  return p;
}

const CLI::Validator point_validator(
    [](std::string& text) -> std::string {
      return parse_point(text) ? std::string() : "expected x,y,z but got '" + text + "'";
    },
    "X,Y,Z");

std::string number(double value) {
  std::ostringstream out;
  out.precision(10);
  out << value;
  return out.str();
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += number(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

SurfaceMesh build_mesh(const RunConfig& cfg, int subdiv) {
  if (!cfg.mesh_path.empty()) return load_mesh(cfg.mesh_path);
  return make_icosphere(subdiv);
}

std::string mesh_label(const RunConfig& cfg, int subdiv) {
  return cfg.mesh_path.empty() ? "icosphere(" + std::to_string(subdiv) + ")" : cfg.mesh_path;
}

/// Writes through a file when `path` is set, otherwise to `fallback`.
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& writer) {
  if (path.empty()) {
    writer(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::invalid_argument("cannot open output file '" + path + "'");
  writer(file);
  if (!file) throw std::runtime_error("failed writing '" + path + "'");
}

void emit_json(const std::string& path, const VerificationReport& report, const Provenance& provenance) {
  if (path.empty()) return;
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::invalid_argument("cannot open output file '" + path + "'");
  file << to_json(report, provenance).dump(2) << '\n';
}

GradientTestOptions gradient_options(const RunConfig& cfg) {
  GradientTestOptions options;
  options.mu = cfg.mu;
  options.grid_cells = cfg.grid;
  options.box_half_width = cfg.box;
  options.seed = cfg.seed;
  options.gradient.eps_schedule = cfg.eps;
  options.gradient.richardson_power = cfg.power;
  return options;
}

HomogeneousProblem homogeneous_problem(const RunConfig& cfg) {
  HomogeneousProblem problem;
  problem.domain = cfg.domain_case == "exterior" ? DomainKind::exterior : DomainKind::interior;
  problem.source = *parse_point(cfg.source_text);
  problem.mu = cfg.mu;
  return problem;
}

NonhomogeneousProblem nonhomogeneous_problem(const RunConfig& cfg) {
  NonhomogeneousProblem problem;
  problem.source = *parse_point(cfg.source_text);
  problem.mu = cfg.mu;
  problem.grid_cells = cfg.grid;
  problem.box_half_width = cfg.box;
  problem.seed = cfg.seed;
  return problem;
}

int command_verify(const RunConfig& cfg, std::ostream& out) {
  IdentityCheckOptions options;
  options.samples = cfg.samples;
  options.seed = cfg.seed;
  options.h_scale = cfg.h_scale;
  const VerificationReport report = run_identity_suite(options);
  const Provenance provenance{"verify",
                              {{"samples", std::to_string(cfg.samples)},
                               {"seed", std::to_string(cfg.seed)},
                               {"viscosities", join(options.viscosities)},
                               {"r_range", number(options.r_min) + "," + number(options.r_max)},
                               {"step_factor", number(options.step_factor)},
                               {"h_scale", number(cfg.h_scale)}}};
  for (const auto& check : report.checks) {
    out << (check.passed() ? "PASS " : "FAIL ") << check.name << ": " << format_scientific(check.residual)
        << " <= " << format_scientific(check.tolerance) << '\n';
  }
  if (!cfg.out_path.empty()) {
    std::ofstream file(cfg.out_path, std::ios::binary);
    if (!file) throw std::invalid_argument("cannot open output file '" + cfg.out_path + "'");
    file << to_json(report, provenance).dump(2) << '\n';
  }
  if (!cfg.csv_path.empty()) {
    emit(cfg.csv_path, out, [&](std::ostream& s) { write_checks_csv(s, report.checks, provenance); });
  }
  return report.all_passed() ? exit_ok : exit_check_failed;
}

Provenance table_provenance(const RunConfig& cfg) {
  Provenance provenance{cfg.command, {}};
  auto& c = provenance.config;
  c.emplace_back("mesh", mesh_label(cfg, cfg.subdiv));
  c.emplace_back("mu", number(cfg.mu));
  if (cfg.command == "solve") c.emplace_back("case", cfg.domain_case);
  if (cfg.command == "solve" || cfg.command == "volume") c.emplace_back("source", cfg.source_text);
  if (cfg.command == "volume" || (cfg.command == "gradients" && cfg.problem == "c")) {
    c.emplace_back("grid", std::to_string(cfg.grid));
    c.emplace_back("box", number(cfg.box));
    c.emplace_back("seed", std::to_string(cfg.seed));
  }
  if (cfg.command == "gradients") {
    c.emplace_back("problem", cfg.problem);
    c.emplace_back("eps", join(cfg.eps));
    c.emplace_back("power", std::to_string(cfg.power));
  }
  return provenance;
}

int command_table(const RunConfig& cfg, std::ostream& out) {
  const SurfaceMesh mesh = build_mesh(cfg, cfg.subdiv);
  VerificationReport report;
  if (cfg.command == "solve") {
    report.tables.push_back(run_homogeneous_test(mesh, homogeneous_problem(cfg)));
  } else if (cfg.command == "volume") {
    report.tables.push_back(run_nonhomogeneous_test(mesh, nonhomogeneous_problem(cfg)));
  } else {
    report.tables.push_back(
        run_gradient_test(mesh, parse_gradient_problem(cfg.problem), gradient_options(cfg)).run);
  }
  const Provenance provenance = table_provenance(cfg);
  emit(cfg.out_path, out, [&](std::ostream& s) { write_tables_csv(s, report.tables, provenance); });
  emit_json(cfg.json_path, report, provenance);
  return exit_ok;
}

int command_convergence(const RunConfig& cfg, std::ostream& out) {
  struct Level {
    int subdiv;
    int elements;
    TableRun run;
  };
  std::vector<Level> levels;
  for (int s : cfg.subdivs) {
    const SurfaceMesh mesh = make_icosphere(s);
    TableRun run;
    if (cfg.suite == "homogeneous") {
      run = run_homogeneous_test(mesh, homogeneous_problem(cfg));
    } else if (cfg.suite == "volume") {
      run = run_nonhomogeneous_test(mesh, nonhomogeneous_problem(cfg));
    } else {
      run = run_gradient_test(mesh, parse_gradient_problem(cfg.problem), gradient_options(cfg)).run;
    }
    levels.push_back({s, mesh.num_elements(), std::move(run)});
  }

  Provenance provenance{"convergence",
                        {{"suite", cfg.suite},
                         {"subdivs", join(cfg.subdivs)},
                         {"mu", number(cfg.mu)}}};
  if (cfg.suite == "gradients") {
    provenance.config.emplace_back("problem", cfg.problem);
    provenance.config.emplace_back("eps", join(cfg.eps));
    provenance.config.emplace_back("power", std::to_string(cfg.power));
  } else {
    provenance.config.emplace_back("source", cfg.source_text);
  }
  if (cfg.suite == "homogeneous") provenance.config.emplace_back("case", cfg.domain_case);
  if (cfg.suite == "volume" || (cfg.suite == "gradients" && cfg.problem == "c")) {
    provenance.config.emplace_back("grid", std::to_string(cfg.grid));
    provenance.config.emplace_back("box", number(cfg.box));
    provenance.config.emplace_back("seed", std::to_string(cfg.seed));
  }

  bool decay_ok = true;
  emit(cfg.out_path, out, [&](std::ostream& s) {
    s << "# command: convergence\n# version: " << version_string() << '\n';
    for (const auto& [key, value] : provenance.config) s << "# " << key << ": " << value << '\n';
    s << "subdiv,elements,field,component,error,reference,ratio,decay\n";
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto& rows = levels[i].run.table.rows;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const double ratio = reference_ratio(row);
        s << levels[i].subdiv << ',' << levels[i].elements << ',' << row.field << ",\"" << row.component << "\","
          << format_scientific(row.error) << ',' << (row.reference > 0.0 ? format_scientific(row.reference) : "")
          << ',' << (std::isnan(ratio) ? "" : format_scientific(ratio)) << ',';
        if (i > 0) {
          const double decay = levels[i - 1].run.table.rows[r].error / row.error;
          s << format_scientific(decay);
          if (!(decay >= cfg.min_decay)) decay_ok = false;
        }
        s << '\n';
      }
    }
  });
  if (!cfg.json_path.empty()) {
    VerificationReport report;
    for (auto& level : levels) report.tables.push_back(level.run);
    emit_json(cfg.json_path, report, provenance);
  }
  return decay_ok ? exit_ok : exit_check_failed;
}

void add_mesh_options(CLI::App* cmd, RunConfig& cfg) {
  auto* subdiv = cmd->add_option("--subdiv", cfg.subdiv, "Icosphere subdivision level")
                     ->check(CLI::Range(0, kMaxSubdivisions))
                     ->capture_default_str();
  cmd->add_option("--mesh", cfg.mesh_path, "Closed OFF or OBJ surface instead of an icosphere")
      ->check(CLI::ExistingFile)
      ->excludes(subdiv);
}

void add_output_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--out", cfg.out_path, "CSV report path (default: standard output)");
  cmd->add_option("--json", cfg.json_path, "JSON mirror of the report");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  constexpr int max_threads = 4096;
  RunConfig cfg;
  CLI::App app{"Boundary-integral solver for the non-homogeneous Stokes equation", "stokes-bie"};
  app.set_config("--config", "", "Read key = value options from a file ([command] sections for subcommands)");
  auto* threads = app.add_option("--threads", cfg.threads, "Worker threads (default: STOKES_THREADS, else all cores)")
                      ->check(CLI::Range(1, max_threads));
  app.add_option("--seed", cfg.seed, "Random seed for sampling and ray casting")->capture_default_str();
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Kernel identity and derivative checks");
  verify->add_option("--samples", cfg.samples, "Random point pairs")->check(CLI::Range(1, 10000000))->capture_default_str();
  verify->add_option("--seed", cfg.seed, "Random seed");
  verify->add_option("--out", cfg.out_path, "JSON report path");
  verify->add_option("--csv", cfg.csv_path, "CSV report path");
  verify->add_option("--h-scale", cfg.h_scale, "Self-test: scale H inside the checks (anything but 1 must fail)");

  auto* solve = app.add_subcommand("solve", "Homogeneous mixed problem with point-source data");
  solve->add_option("--case", cfg.domain_case, "Fluid side")->check(CLI::IsMember({"interior", "exterior"}))->required();
  solve->add_option("--source", cfg.source_text, "Point-source location")->check(point_validator)->required();
  solve->add_option("--mu", cfg.mu, "Viscosity")->check(CLI::PositiveNumber);
  add_mesh_options(solve, cfg);
  add_output_options(solve, cfg);

  auto* volume = app.add_subcommand("volume", "Nonhomogeneous interior problem with an H exact solution");
  volume->add_option("--source", cfg.source_text, "Centre of the body force")->check(point_validator)->required();
  volume->add_option("--grid", cfg.grid, "Grid cells per axis")->check(CLI::Range(1, 1000))->capture_default_str();
  volume->add_option("--box", cfg.box, "Grid box half width")->check(CLI::PositiveNumber)->capture_default_str();
  volume->add_option("--mu", cfg.mu, "Viscosity")->check(CLI::PositiveNumber);
  volume->add_option("--seed", cfg.seed, "Ray-casting seed");
  add_mesh_options(volume, cfg);
  add_output_options(volume, cfg);

  auto* gradients = app.add_subcommand("gradients", "Boundary velocity gradients for test problem a, b or c");
  gradients->add_option("--problem", cfg.problem, "Test problem")->check(CLI::IsMember({"a", "b", "c"}))->required();
  gradients->add_option("--grid", cfg.grid, "Grid cells per axis (problem c)")->check(CLI::Range(1, 1000));
  gradients->add_option("--box", cfg.box, "Grid box half width (problem c)")->check(CLI::PositiveNumber);
  gradients->add_option("--eps", cfg.eps, "Offset schedule, decreasing")->delimiter(',')->check(CLI::PositiveNumber);
  gradients->add_option("--power", cfg.power, "Extrapolate in eps^power")->check(CLI::Range(1, 8));
  gradients->add_option("--seed", cfg.seed, "Ray-casting seed");
  add_mesh_options(gradients, cfg);
  add_output_options(gradients, cfg);

  auto* convergence = app.add_subcommand("convergence", "Error tables across icosphere refinements");
  convergence->add_option("--suite", cfg.suite, "homogeneous, volume or gradients")
      ->check(CLI::IsMember({"homogeneous", "volume", "gradients"}))
      ->required();
  convergence->add_option("--subdivs", cfg.subdivs, "Subdivision levels")
      ->delimiter(',')
      ->check(CLI::Range(0, kMaxSubdivisions));
  convergence->add_option("--case", cfg.domain_case, "Fluid side (homogeneous)")
      ->check(CLI::IsMember({"interior", "exterior"}));
  convergence->add_option("--source", cfg.source_text, "Source point")->check(point_validator);
  convergence->add_option("--problem", cfg.problem, "Gradient problem")->check(CLI::IsMember({"a", "b", "c"}));
  convergence->add_option("--grid", cfg.grid, "Grid cells per axis")->check(CLI::Range(1, 1000));
  convergence->add_option("--box", cfg.box, "Grid box half width")->check(CLI::PositiveNumber);
  convergence->add_option("--mu", cfg.mu, "Viscosity")->check(CLI::PositiveNumber);
  convergence->add_option("--eps", cfg.eps, "Offset schedule")->delimiter(',')->check(CLI::PositiveNumber);
  convergence->add_option("--power", cfg.power, "Extrapolate in eps^power")->check(CLI::Range(1, 8));
  convergence->add_option("--min-decay", cfg.min_decay, "Fail when an error shrinks by less than this factor");
  convergence->add_option("--seed", cfg.seed, "Ray-casting seed");
  add_output_options(convergence, cfg);

  std::vector<const char*> argv{"stokes-bie"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  // CLI11 skips validators for environment values, so parse this one here.
  if (threads->count() == 0) {
    if (const char* env = std::getenv("STOKES_THREADS"); env != nullptr && *env != '\0') {
      const std::string_view text(env);
      const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), cfg.threads);
      if (ec != std::errc() || end != text.data() + text.size() || cfg.threads < 1 || cfg.threads > max_threads) {
        err << "error: STOKES_THREADS must be an integer in [1, " << max_threads << "], got '" << text << "'\n";
        return exit_usage;
      }
    }
  }

  cfg.command = app.get_subcommands().front()->get_name();
  if (cfg.command == "convergence") {
    if (cfg.subdivs.empty()) {
      err << "error: --subdivs needs at least one level\n";
      return exit_usage;
    }
    if (cfg.source_text.empty()) cfg.source_text = cfg.suite == "volume" ? "2,0,0" : "-2,0,0";
  }
  if (cfg.command == "gradients" || cfg.command == "convergence") {
    for (std::size_t i = 1; i < cfg.eps.size(); ++i) {
      if (!(cfg.eps[i] < cfg.eps[i - 1])) {
        err << "error: --eps must be strictly decreasing\n";
        return exit_usage;
      }
    }
    if (cfg.eps.size() < 2) {
      err << "error: --eps needs at least two offsets\n";
      return exit_usage;
    }
  }
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  try {
    if (cfg.command == "verify") return command_verify(cfg, out);
    if (cfg.command == "convergence") return command_convergence(cfg, out);
    return command_table(cfg, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const MeshError& e) {
    err << "mesh error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace stokes_bie
