#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lowps::cli {

// Entry point of the lowps tool: `lowps grid|stability|koopman|bench`.
// Returns the process exit code: 0 on success, 1 for I/O failures, 2 for
// command-line or config errors, 3 for violated preconditions, 4 for
// non-convergence and 5 when a size cap is exceeded. Diagnostics go to err,
// reports printed on the terminal go to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lowps::cli
