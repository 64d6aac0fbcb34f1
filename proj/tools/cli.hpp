#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace perlat::cli {

/// Runs one command. `args` excludes the program name. Returns 0 on success,
/// 2 for input errors, 3 for configuration errors, 4 for numerical failures
/// and 1 for anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code(const std::exception& e);

}  // namespace perlat::cli
