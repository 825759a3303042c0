#pragma once

#include <iosfwd>

namespace invman {

inline constexpr int kExitPersists = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFails = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitUsage = 64;

/// Entry point of the command-line tool. Reports go to `out` (or --output),
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace invman
