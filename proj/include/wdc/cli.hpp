#pragma once

#include <iosfwd>

namespace wdc {

/// Entry point of the `wdc` command-line tool. Returns 0 on success, 1 on a processing
/// error and 2 on a usage error; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace wdc
