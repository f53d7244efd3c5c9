#pragma once

// Command-line driver: subcommands fit, register, simulate and peaks.
// Settings resolve as flags > config file > defaults; the resolved settings
// are written to <out-dir>/config.json and embedded in every JSON output.

#include <ostream>

namespace bernreg {

/// Runs the CLI and returns the process exit code. Errors are reported on
/// `err` as {"error": {"kind", "exit_code", "message"}}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bernreg
