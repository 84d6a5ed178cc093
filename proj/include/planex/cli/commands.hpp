#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace planex::cli {

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on a runtime failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace planex::cli
