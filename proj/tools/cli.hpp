#pragma once

namespace nlosc::cli {

enum ExitCode : int { ok = 0, invalid_input = 2, partial = 3 };

/// Parse the command line and run one subcommand. Diagnostics go to stderr.
int run(int argc, const char* const* argv);

}  // namespace nlosc::cli
