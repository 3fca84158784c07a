#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clinagent {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // pipeline or domain failure
inline constexpr int kExitUsage = 2;    // bad flags or unreadable/invalid input

/// Entry point for the `clinagent` command line. Output goes to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clinagent
