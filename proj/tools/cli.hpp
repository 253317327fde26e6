#pragma once

#include <string>
#include <vector>

namespace barrierflow::cli {

// Dispatches "run", "flow", "escape", "diagnose", "sweep". Returns the process
// exit code: 0 on success, 2 on solver errors, 3 on configuration errors.
// Errors are reported as one-line JSON on stderr.
int cli_main(const std::vector<std::string>& args);

}  // namespace barrierflow::cli
