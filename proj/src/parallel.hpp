#pragma once

#include <cstddef>
#include <functional>

namespace lapseg {

// Number of worker threads used for data-parallel loops. Resolves once per
// process: min(hardware threads, LAPSEG_THREADS when set).
int worker_threads();

// Runs fn(begin, end) over disjoint index ranges. The partitioning depends
// only on (n, worker_threads()), callers write disjoint outputs, and every
// range is processed with a fixed-order inner loop, so results do not depend
// on scheduling.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn);

}  // namespace lapseg
