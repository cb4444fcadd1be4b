#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sysid::cli {

/// Exit codes, stable for scripting.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNumericalError = 3,
  kHorizonExhausted = 4,
  kUnreachable = 5,
};

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sysid::cli
