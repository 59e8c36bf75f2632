// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace hamdrift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitSolverDiverged = 3;

/**
 * The `hamdrift <experiment> [flags]` entry point. CSV goes to `out` unless
 * --output names a file; diagnostics go to `err`.
 *
 * --config reads `key = value` lines whose keys are the long flag names.
 * A CSV written by this tool is itself accepted: its `# key = value`
 * header block is used and the data rows are ignored. Flags given on the
 * command line override the file.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hamdrift
