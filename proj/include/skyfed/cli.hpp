#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace skyfed {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInfeasible = 2, kExitIo = 3 };

/// Runs `skyfed place|trajectory|train|sweep ...` in-process. argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skyfed
