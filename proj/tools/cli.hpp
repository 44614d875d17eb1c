#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thermfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation. `args` excludes the program name. Diagnostics go to
/// `err`, progress and summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thermfuse::cli
