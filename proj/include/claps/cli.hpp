#pragma once

// `claps` command line: run, ablate, diagnose, synth, score.
//
// Exit codes: 0 success, 1 fatal error, 2 partial failure (some methods or
// seeds failed, the rest of the report was written).
//
// Output directory precedence: --out flag, then "output_dir" in the config
// file, then $CLAPS_OUTPUT_DIR, then ./runs. Other flags override the
// matching config field.

#include <ostream>
#include <string>
#include <vector>

namespace claps::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

inline constexpr const char* kOutputDirEnv = "CLAPS_OUTPUT_DIR";

/// Parses `args` (without the program name) and executes one subcommand.
/// The one-line JSON summary goes to `out`; logs go to standard error.
int run(const std::vector<std::string>& args, std::ostream& out);

int main(int argc, char** argv);

}  // namespace claps::cli
