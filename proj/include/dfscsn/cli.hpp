#pragma once

namespace dfscsn {

/// Entry point behind the command-line binary. Exit codes: 0 success,
/// 2 usage error, 3 data validation error, 4 numerical failure.
int cli_main(int argc, char** argv);

}  // namespace dfscsn
