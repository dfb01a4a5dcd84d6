#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace corpuskit::cli {

/// Runs the command line `args` (without the program name). Data goes to
/// `out`, structured log lines to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corpuskit::cli
