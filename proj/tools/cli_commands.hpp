#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace s3t::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kNoAlarm = 3,
    kSaturation = 4,
    kInternal = 1,
};

/// Runs the command line `args` (args[0] is the program name). Standard
/// input, output and error are passed in so tests can drive it in-process.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace s3t::cli
