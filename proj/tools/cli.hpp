#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stheta::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailed = 1, kUsageError = 2, kBudgetExceeded = 3 };

/// Runs one command line (args[0] is the program name). Results go to `out`
/// (or the --out file), diagnostics to `err`; "--input -" reads `in`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace stheta::cli
