#pragma once

#include <iosfwd>

namespace coxam::cli {

/// Parses arguments and runs one subcommand; returns the process exit code.
/// Usage errors return 2; library errors map through exit_code_for.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coxam::cli
