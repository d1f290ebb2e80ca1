#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hubstar {

/// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_violations = 1;
inline constexpr int exit_error = 2;

/// Runs one command. `args` excludes the program name. Reports go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hubstar
