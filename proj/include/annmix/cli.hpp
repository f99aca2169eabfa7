#pragma once

#include <iosfwd>

namespace annmix {

// Entry point of the `annmix` tool. Returns the process exit code; all
// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace annmix
