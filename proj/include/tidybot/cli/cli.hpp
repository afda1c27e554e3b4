#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tidybot::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kValidation = 1, kUsage = 2, kBackend = 3 };

/// Runs the command line (`args[0]` is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tidybot::cli
