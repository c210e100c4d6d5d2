#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spectube {

/// One `spectube <subcommand> --config <path> [--out <dir>] [--seed <int>]` invocation; `args`
/// excludes the program name. Returns 0 on success, 2 on validation failures (bad config,
/// input or topology) and 3 on numerical failures. On failure a one-line error JSON is written
/// to `err`. Notices recorded during the run follow on `err` as `notice: ...` lines.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace spectube
