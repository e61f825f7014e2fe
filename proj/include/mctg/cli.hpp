#pragma once
// Command-line front end. Exposed as a library function so tests can drive
// whole runs in-process and capture output.

#include <iostream>
#include <string>
#include <vector>

namespace mctg::cli {

// args excludes argv[0]. Returns the process exit status; stage failures
// print one machine-readable JSON line ({"error": {...}}) to err.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace mctg::cli
