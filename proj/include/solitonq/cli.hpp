#pragma once

#include <string>

namespace solitonq {

// Entry point behind main(): parses
//   solitonq <kind> --config FILE [--seed INT] [--out DIR] [--threads INT]
// and dispatches. Returns the process exit code: 0 success, 2 validation
// error, 3 numerical-diagnostic failure.
int run_cli(int argc, char** argv);

}  // namespace solitonq
