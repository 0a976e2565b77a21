#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dslm::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Entry point behind the `dslm` binary. `args` excludes the program name.
// Returns 0 on success, 1 on a domain error, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dslm::cli
