#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tripsim::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// status: 0 on success, 1 on data errors, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

} // namespace tripsim::cli
