#pragma once

#include <string>
#include <vector>

namespace dolly::cli {

/// Runs one CLI invocation in-process. args excludes the program name.
/// Exit codes: 0 success, 2 config error, 3 runtime/numeric error.
int run(const std::vector<std::string>& args);

}  // namespace dolly::cli
