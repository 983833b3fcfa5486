#pragma once

#include <string>
#include <vector>

namespace autoeval {

/// Entry point behind the autoeval binary; also callable in-process for
/// tests. Returns the process exit code.
int run_cli(std::vector<std::string> args);
int run_cli(int argc, char** argv);

}  // namespace autoeval
