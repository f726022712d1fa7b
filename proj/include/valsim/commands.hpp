#pragma once

// The valsim command line: controllability, dialogue, analyze, report.

#include <iosfwd>

namespace valsim {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitUsage = 2,
  kExitTransport = 3,  // transport failures / failed cells
  kExitValidation = 4,  // configuration, data, or contract violations
  kExitIncomplete = 5,  // campaign has pending or failed cells
};

// Parses argv and runs a subcommand. Never throws; errors map to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace valsim
