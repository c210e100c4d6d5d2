#pragma once

#include <functional>

namespace spectube {

/// Worker count: SPECTUBE_THREADS if set and positive, otherwise the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers write results
/// into per-index slots so the outcome does not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& body);

} // namespace spectube
