#pragma once

namespace wgqed {

// Entry point for the wgqed tool. Exit codes: 0 success, 1 internal or
// check failure, 2 config error, 3 documented no-solution.
int run_cli(int argc, char** argv);

}  // namespace wgqed
