#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpaudit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

// argv[0] is the program name. Returns 0 on success, 1 on an operational
// error and 2 on a usage error.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace dpaudit
