#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thermocad::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1; // some images were skipped
inline constexpr int kExitInvalid = 2; // invalid configuration or input

// Runs the command line `args` (args[0] is the program name). Normal output
// goes to `out`, diagnostics and failure summaries to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace thermocad::cli
