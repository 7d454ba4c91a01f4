#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sfda {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 2,
  kExitValidation = 3,
  kExitInternal = 4,
};

/// Runs the command line `args` (without the program name). Reports go to
/// the --out file or, when absent, to `out`; diagnostics and timings go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sfda
