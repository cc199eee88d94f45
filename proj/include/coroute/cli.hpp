#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coroute {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs one command line (args[0] is the program name). Data goes to
/// files or `out`; diagnostics go to `err` as "error: <kind>: <message>".
/// Verbs: generate, solve, train, evaluate, replan, plot, validate.
/// COROUTE_THREADS and COROUTE_CONFIG supply defaults for --threads and
/// --config.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coroute
