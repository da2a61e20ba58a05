#pragma once

#include <string>
#include <vector>

namespace eod::cli {

// Entry point of the `eod` command; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace eod::cli
