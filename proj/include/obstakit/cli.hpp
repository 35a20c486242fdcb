#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace obstakit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonConvergence = 3;

/// obstakit <command> [--config FILE] [--key=value ...]
/// Commands: mesh-info, solve-obstacle, solve-control, table1, subspace-verify.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace obstakit::cli
