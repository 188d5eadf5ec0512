#pragma once

#include <iosfwd>

namespace sq {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;

/// Entry point for `sq <validate|fit|backtest|report|simulate> ...`.
/// Data files go to --out-dir; diagnostics and logs go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sq
