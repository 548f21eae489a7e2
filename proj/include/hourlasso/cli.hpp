#pragma once

#include <iosfwd>

namespace hourlasso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitModel = 3;
inline constexpr int kExitUsage = 64;

/// Runs the command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hourlasso::cli
