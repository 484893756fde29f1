#pragma once

#include <ostream>

namespace rcsbp {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;     ///< a verification verdict was FAIL
inline constexpr int kExitConfig = 2;   ///< usage or configuration error
inline constexpr int kExitRuntime = 3;  ///< numerical failure

/// Entry point of the `rcsbp` tool; results go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace rcsbp
