#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace soco::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

/// Runs the command line `args` (without the program name). Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace soco::cli
