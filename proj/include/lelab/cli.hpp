#pragma once

#include <iosfwd>

namespace lelab {

/// Entry point of the `lelab` executable. Returns 0 on success, 1 on a
/// numerical failure and 2 on a usage or config error.
int run_cli(int argc, char** argv);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lelab
