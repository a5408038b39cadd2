#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rpac::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kNotConverged = 3;

// Runs one subcommand. `args` excludes the program name. JSON results go to
// `out` (or the --out file); failures are written to `err` as
// {"error":{"kind":...,"detail":...}}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpac::cli
