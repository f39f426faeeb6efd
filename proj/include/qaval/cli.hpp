#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qaval::cli {

enum ExitCode : int {
    kSuccess = 0,
    kRuntimeFailure = 1,
    kUsageError = 2,
};

// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qaval::cli
