#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace oamtomo::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 2,
  kNumericalFailure = 3,
  kIoFailure = 4,
};

/// Runs the `oamtomo` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oamtomo::cli
