#pragma once

#include <string>
#include <vector>

namespace spectube {

/// Records a non-fatal notice (skipped level, auto-flip, ...). Thread-safe.
void notice(const std::string& message);
/// Returns and clears all notices recorded so far.
std::vector<std::string> take_notices();
/// Echo notices to stderr as they arrive (off by default).
void set_notice_echo(bool echo);

} // namespace spectube
