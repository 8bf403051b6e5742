#pragma once

#include <string>
#include <vector>

namespace xirl::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv, runs one verb and maps errors to exit codes.
int run_cli(int argc, char** argv);

}  // namespace xirl::app
