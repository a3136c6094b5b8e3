#pragma once

// feecal command-line workflow. Exit codes: 0 ok, 2 input or configuration
// error, 3 computation error.

#include <iosfwd>
#include <string>
#include <vector>

namespace feecal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitCompute = 3;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace feecal::cli
