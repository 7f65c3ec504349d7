#pragma once

#include <cstddef>
#include <functional>

namespace ssb {

/// Worker count: hardware concurrency, capped by the SSB_THREADS environment
/// variable when set to a positive integer.
int worker_count();

/// Runs fn(i) for i in [0, n) across worker threads. Callers write results
/// into slot i so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ssb
