#pragma once

#include <cstddef>
#include <functional>

namespace qbrolin {

/// Worker count used by parallel_for; 0 selects hardware concurrency.
void set_worker_count(int n);
int worker_count();

/// Runs body(i) for i in [0, n) over a static partition into contiguous
/// chunks. Callers write results into slot i, so output never depends on
/// scheduling. If bodies throw, the exception from the lowest chunk is
/// rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qbrolin
