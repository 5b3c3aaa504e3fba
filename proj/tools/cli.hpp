#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace addrhop::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

// Runs the command line (args excludes the program name). Results go to `out`
// unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace addrhop::cli
