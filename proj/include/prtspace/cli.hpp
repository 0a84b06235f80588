#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prtspace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // diagnostics, domain or verification failure
inline constexpr int kExitUsage = 2;    // I/O or usage error

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace prtspace::cli
