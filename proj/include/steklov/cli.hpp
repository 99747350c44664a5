#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace steklov::cli {

enum ExitCode : int {
  ok = 0,
  check_failed = 1,
  config_error = 2,
  numeric_error = 3,
};

/// Entry point of `steklab`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steklov::cli
