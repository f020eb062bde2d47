#pragma once

#include <iosfwd>

namespace riskdisc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kInternal = 3,
};

/// Parses argv, runs one subcommand, and maps failures onto exit codes.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace riskdisc::cli
