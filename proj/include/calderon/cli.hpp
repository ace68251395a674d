#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace calderon {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitValidation = 2, kExitNumeric = 3, kExitIo = 4 };

// Entry point of calderon_lab: validate | dtn | probe | stability | derivative | sweep.
// args[0] is the program name, as in argv.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace calderon
