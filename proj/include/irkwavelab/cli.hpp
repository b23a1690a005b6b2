#pragma once
// Command-line front end (schemes, analyze, optimize, map, run, verify),
// callable in-process for tests.
#include <string>
#include <vector>

namespace irkwl {

// argv-style entry point (without the program name). Returns the exit code:
// 0 success, 1 failed checks/runs, 2 usage or lookup errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace irkwl
