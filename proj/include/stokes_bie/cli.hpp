#ifndef STOKES_BIE_CLI_HPP
#define STOKES_BIE_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace stokes_bie {

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2, exit_numerical = 3 };

/// Runs the command line `args` (program name excluded). Reports go to the
/// requested files or to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stokes_bie

#endif  // STOKES_BIE_CLI_HPP
