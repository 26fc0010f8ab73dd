#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fraudsel::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericalError = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fraudsel::cli
