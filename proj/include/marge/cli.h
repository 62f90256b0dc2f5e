#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace marge::cli {

// Exit status: 0 success, 1 domain error, 2 usage error.
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace marge::cli
