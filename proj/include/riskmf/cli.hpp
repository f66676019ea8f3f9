/**
 * @file cli.hpp
 * @brief Command-line front end
 *
 * riskmf <riccati|simulate|fpk|value|validate|sweep> --config PATH [--set k=v]... [--out DIR] [--jobs N] [--seed N]
 *
 * Exit codes: 0 success, 1 a validation check failed, 2 bad input, 3 numerical failure.
 * Errors are written to stderr as one JSON line.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskmf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace riskmf
