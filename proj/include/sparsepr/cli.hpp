#pragma once

#include <iosfwd>

namespace sparsepr {

/// Exit statuses of the command-line tool.
enum ExitStatus : int { kExitOk = 0, kExitFailure = 1, kExitInvalidConfig = 2, kExitNumerical = 3 };

/// Entry point of the `sparsepr` tool; diagnostics go to `err`, progress to `out`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparsepr
