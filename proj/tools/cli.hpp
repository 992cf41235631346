#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bhm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
/// check-zero: data consistent with zero; fit: refused for the same reason.
inline constexpr int kExitZero = 2;
/// fit: no acceptable division up to t_max (the best effort is still written).
inline constexpr int kExitUnaccepted = 3;

/// Runs one verb; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bhm::cli
