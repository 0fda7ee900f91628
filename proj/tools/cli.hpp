#pragma once

#include <string>
#include <vector>

namespace reslab::cli {

// Full command-line dispatch. Exit codes: 0 ok, 1 domain error, 2 usage.
int run(const std::vector<std::string>& args);

}  // namespace reslab::cli
