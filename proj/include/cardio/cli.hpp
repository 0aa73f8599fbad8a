#pragma once

#include <string>
#include <vector>

namespace cardio::cli {

// Full command surface; returns the process exit code. Exposed as a library
// entry point so tests can drive the real commands in-process.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args); // args without argv[0]

} // namespace cardio::cli
