#pragma once

#include <ostream>

namespace ttxai {

/// Entry point behind the `ttxai` executable. Returns 0 on success, 1 on a
/// validation error (bad flags, config or input content) and 2 on an I/O or
/// backend failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ttxai
