#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <vector>

#include "talp/ci_client.hpp"
#include "talp/measurement.hpp"

namespace talp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kInputError = 2,
  kNetworkError = 3,
  kEmptyInput = 4,
};

/// Everything a command reads from the outside world, injectable for tests.
struct Context {
  std::ostream& out;
  std::ostream& err;
  Environment env;
  const CommitInfoProvider* vcs = nullptr;  // nullptr selects GitCommandProvider
  RetryPolicy retry;
};

/// Environment variables consulted by the commands, read from the process.
Environment process_environment();

/// Runs `talp <args...>` (args excludes the program name).
int run(const std::vector<std::string>& args, Context& ctx);

}  // namespace talp::cli
