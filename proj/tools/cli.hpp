#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iflow::cli {

/// Runs one command line (args[0] is the program name). Returns the process exit code:
/// 0 when every requested output was written, 1 on runtime errors, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iflow::cli
