#pragma once

#include <string>
#include <vector>

namespace rrcal::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIoError = 3,
  kParseFailure = 4,
  kUnidentifiable = 5,
  kNoConsensus = 6,
  kNotConverged = 7,
};

/// Runs one command line; argv[0] is the program name.
int run(const std::vector<std::string>& argv);

}  // namespace rrcal::cli
