#pragma once

#include <string>
#include <vector>

namespace hfpath {

// Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
int parse_and_dispatch(const std::vector<std::string>& args);
int parse_and_dispatch(int argc, const char* const* argv);

std::string version_string();

}  // namespace hfpath
