#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finslerlab {

inline constexpr const char* kToolVersion = "1.0.0";

/// Runs one command. `args` excludes the program name. Returns 0 on success, 1 when a check
/// fails or an evaluation error occurs, 2 on usage and parse errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace finslerlab
