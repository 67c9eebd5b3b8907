#pragma once

#include <iosfwd>

namespace hsps::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    Success = 0,
    /// `validate` ran but at least one check had |z| >= 3.
    ValidationFailed = 1,
    InputFailure = 2,
    ComputationFailure = 3,
};

/// Parses and runs one command line. Summaries go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hsps::cli
