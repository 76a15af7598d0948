#pragma once

#include <string>
#include <vector>

namespace phn::cli {

/// Entry point used by the phnlab binary and by tests.
/// args excludes argv[0]. Exit codes: 0 success, 2 validation failure,
/// 3 numerical failure (non-finite chain, no valid Lyapunov constants).
int run(const std::vector<std::string>& args);

}  // namespace phn::cli
