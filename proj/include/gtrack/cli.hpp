#pragma once

#include <string>
#include <vector>

namespace gtrack {

// Full command-line surface; args exclude the program name. Returns the
// process exit code. Every successful run writes a RunManifest describing
// its inputs and outputs, and `replay` re-executes a manifest and verifies
// the outputs are byte-identical.
int run_cli(const std::vector<std::string>& args);

}  // namespace gtrack
