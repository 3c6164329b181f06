/**
 * @file cli.h
 * @brief The m2l command line: generate, analyze, check, count-bench.
 *
 * Exit codes: 0 success, 1 runtime failure (including partial generation),
 * 2 usage or configuration error.
 */

#ifndef M2L_CLI_CLI_H
#define M2L_CLI_CLI_H

#include <iosfwd>
#include <string>
#include <vector>

namespace m2l::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace m2l::cli

#endif  // M2L_CLI_CLI_H
