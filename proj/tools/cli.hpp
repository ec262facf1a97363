#pragma once

#include <ostream>
#include <span>
#include <string>

namespace mfbwalk::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitDiscrepancy = 3,
  kExitUsage = 64,
  kExitNoInput = 66,
};

/// Runs one command. `args` excludes the program name. Reports go to `out`,
/// diagnostics and errors to `err`.
int run(std::span<const std::string> args, std::ostream &out,
        std::ostream &err);

} // namespace mfbwalk::cli
