#pragma once

#include <iosfwd>

namespace tppfit {

// Exit codes: 0 ok, 1 usage, 2 data error, 3 infeasible design.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tppfit
