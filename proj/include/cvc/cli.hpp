#pragma once

#include <string>
#include <vector>

namespace cvc {

// Runs one CLI invocation (args exclude the program name) and returns the
// process exit code:
//   0 ok, 2 usage error, 3 I/O failure, 4 training divergence,
//   5 checkpoint/feature incompatibility, 6 verification failure.
int run_cli(std::vector<std::string> args);

} // namespace cvc
