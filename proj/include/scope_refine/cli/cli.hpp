#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scope_refine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;  // diagnostics, partial runs, failed checks

// Entry point of the `scope-refine` tool. `args` excludes the program name.
// Data goes to `out`, diagnostics and --verbose config to `err`; `in` feeds
// `serve --stdio`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace scope_refine::cli
