#pragma once

#include <string>
#include <vector>

namespace screplay {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitSuiteFailure = 3;

/// Entry point of the `screplay` tool. Subcommands: gen-data, run, sweep,
/// grad-check, report, dump-embeddings.
int cli_run(int argc, char** argv);
int cli_run(const std::vector<std::string>& args);

} // namespace screplay
