#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lmbench::cli {

/// Parses `args` (without the program name) and runs the selected command.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lmbench::cli
