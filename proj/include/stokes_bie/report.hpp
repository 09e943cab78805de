#ifndef STOKES_BIE_REPORT_HPP
#define STOKES_BIE_REPORT_HPP

#include <json.hpp>

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stokes_bie/verify.hpp"

namespace stokes_bie {

/// Command and configuration echoed at the top of every report. Nothing
/// time- or host-dependent goes in here so reruns stay byte-identical.
struct Provenance {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
};

/// Library, Eigen and compiler versions.
std::string version_string();

/// error / reference, or NaN when no reference is attached.
double reference_ratio(const ErrorTable::Row& row);

nlohmann::ordered_json to_json(const VerificationReport& report, const Provenance& provenance);

/// "# key: value" header lines, then field,component,error,reference,ratio
/// rows. A table column is prepended when several tables share the file.
void write_tables_csv(std::ostream& out, const std::vector<TableRun>& tables, const Provenance& provenance);

/// Checks as check,residual,tolerance,pass rows with the same header.
void write_checks_csv(std::ostream& out, const std::vector<CheckResult>& checks, const Provenance& provenance);

/// Scientific notation with 6 significant digits after the point.
std::string format_scientific(double value);

}  // namespace stokes_bie

#endif  // STOKES_BIE_REPORT_HPP
