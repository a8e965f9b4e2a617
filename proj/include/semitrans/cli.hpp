#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semitrans::cli {

// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// args excludes the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semitrans::cli
