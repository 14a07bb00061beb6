#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace l3det::cli {

/// Exit codes of the l3det tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 64;

/// Runs one l3det command. `args` excludes the program name. Failures print
/// a single "error[<kind>]: <message>" line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace l3det::cli
