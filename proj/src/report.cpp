#include "stokes_bie/report.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <limits>

namespace stokes_bie {

namespace {

constexpr const char* kLibraryVersion = "1.0.0";

void write_header(std::ostream& out, const Provenance& provenance) {
  out << "# command: " << provenance.command << '\n';
  out << "# version: " << version_string() << '\n';
  for (const auto& [key, value] : provenance.config) out << "# " << key << ": " << value << '\n';
}

std::string ratio_cell(const ErrorTable::Row& row) {
  const double ratio = reference_ratio(row);
  return std::isnan(ratio) ? std::string() : format_scientific(ratio);
}

std::string reference_cell(const ErrorTable::Row& row) {
  return row.reference > 0.0 ? format_scientific(row.reference) : std::string();
}

}  // namespace

std::string version_string() {
  std::string out = std::string("stokes-bie ") + kLibraryVersion + "; Eigen " + std::to_string(EIGEN_WORLD_VERSION) +
                    "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  out += "; clang " __clang_version__;
#elif defined(__GNUC__)
  out += "; gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
         std::to_string(__GNUC_PATCHLEVEL__);
#endif
  return out;
}

double reference_ratio(const ErrorTable::Row& row) {
  return row.reference > 0.0 ? row.error / row.reference : std::numeric_limits<double>::quiet_NaN();
}

std::string format_scientific(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6e", value);
  return buffer;
}

nlohmann::ordered_json to_json(const VerificationReport& report, const Provenance& provenance) {
  nlohmann::ordered_json doc;
  doc["provenance"]["command"] = provenance.command;
  doc["provenance"]["version"] = version_string();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : provenance.config) config[key] = value;
  doc["provenance"]["config"] = config;

  doc["checks"] = nlohmann::ordered_json::array();
  for (const auto& check : report.checks) {
    doc["checks"].push_back({{"name", check.name},
                             {"residual", check.residual},
                             {"tolerance", check.tolerance},
                             {"pass", check.passed()}});
  }
  doc["tables"] = nlohmann::ordered_json::array();
  for (const auto& run : report.tables) {
    nlohmann::ordered_json table;
    table["name"] = run.table.name;
    nlohmann::ordered_json settings = nlohmann::ordered_json::object();
    for (const auto& [key, value] : run.settings) settings[key] = value;
    table["settings"] = settings;
    table["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : run.table.rows) {
      nlohmann::ordered_json entry{{"field", row.field}, {"component", row.component}, {"error", row.error}};
      if (row.reference > 0.0) {
        entry["reference"] = row.reference;
        entry["ratio"] = reference_ratio(row);
      } else {
        entry["reference"] = nullptr;
        entry["ratio"] = nullptr;
      }
      table["rows"].push_back(entry);
    }
    doc["tables"].push_back(table);
  }
  doc["all_passed"] = report.all_passed();
  return doc;
}

void write_tables_csv(std::ostream& out, const std::vector<TableRun>& tables, const Provenance& provenance) {
  write_header(out, provenance);
  const bool several = tables.size() > 1;
  for (const auto& run : tables) {
    out << "# table: " << run.table.name << '\n';
    for (const auto& [key, value] : run.settings) out << "#   " << key << ": " << value << '\n';
  }
  out << (several ? "table," : "") << "field,component,error,reference,ratio\n";
  for (const auto& run : tables) {
    for (const auto& row : run.table.rows) {
      if (several) out << '"' << run.table.name << "\",";
      out << row.field << ',' << '"' << row.component << '"' << ',' << format_scientific(row.error) << ','
          << reference_cell(row) << ',' << ratio_cell(row) << '\n';
    }
  }
}

void write_checks_csv(std::ostream& out, const std::vector<CheckResult>& checks, const Provenance& provenance) {
  write_header(out, provenance);
  out << "check,residual,tolerance,pass\n";
  for (const auto& check : checks) {
    out << '"' << check.name << "\"," << format_scientific(check.residual) << ',' << format_scientific(check.tolerance)
        << ',' << (check.passed() ? "true" : "false") << '\n';
  }
}

}  // namespace stokes_bie
