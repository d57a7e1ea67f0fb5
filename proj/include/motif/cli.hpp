#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace motif::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericError = 4,
};

/// Runs the command line given as args (args[0] is the program name).
/// Normal output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace motif::cli
