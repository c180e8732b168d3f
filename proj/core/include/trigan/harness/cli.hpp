#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trigan {

/// Entry point of the `trigan` tool: train | sweep | generate | eval.
///
/// Settings resolve as built-in defaults ($TRIGAN_OUT for the output root),
/// then the JSON file given by --config, then individual flags. Unknown
/// flags and unknown config keys are errors. `args` excludes the program
/// name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace trigan
