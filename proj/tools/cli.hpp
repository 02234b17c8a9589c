#pragma once

#include <iosfwd>

namespace reread::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2 };

/// Runs one subcommand. Reports go to `out`, diagnostics to `err`.
/// Returns 0 on success, 1 on validation, config or usage errors, 2 on I/O
/// errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reread::cli
