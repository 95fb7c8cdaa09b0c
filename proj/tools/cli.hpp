#pragma once

#include <ostream>

namespace mtmrc {

// Entry point of the mtmrc tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mtmrc
