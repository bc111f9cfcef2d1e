#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace p3f {

/// Exit codes: 0 success, 1 usage/IO error, 2 fit non-convergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNoConvergence = 2;

/// Runs the `simulate | fit | extract | synth | survey` front end.
/// `args` excludes the program name. All file output is byte-identical
/// for identical inputs and flags.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace p3f
