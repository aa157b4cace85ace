#pragma once

#include <string>
#include <vector>

namespace ccvec::cli {

// Exit status: 0 success, 1 user error (flags, configs, unusable inputs),
// 2 internal error. Every successful run writes its resolved configuration
// to a sidecar JSON file next to its primary output.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace ccvec::cli
