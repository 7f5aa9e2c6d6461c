#pragma once

#include <iosfwd>

namespace msabs {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInfeasible = 2,
  kExitValidation = 3,
  kExitConfig = 4,
};

/// Runs the `msabs` command line. Subcommands: params, abstract, plan,
/// validate, export.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msabs
