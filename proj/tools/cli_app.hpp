#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gafrl::cli {

// Runs the command line in-process. Returns the exit code: 0 on success,
// 1 for runtime errors, 2 for usage errors. Failures print one line
// "error: <kind>: <message>" to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gafrl::cli
