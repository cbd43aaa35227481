#pragma once

namespace zeus {

// Entry point for the command-line tool. Returns the process exit code:
// 0 success, 2 usage or config error, 3 numeric failure, 4 i/o failure.
int run_cli(int argc, const char* const* argv);

}  // namespace zeus
