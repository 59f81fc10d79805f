#pragma once

#include <functional>

namespace kindiff {

// Worker cap: KINDIFF_THREADS env var (>=1), else hardware concurrency.
int max_threads();

// Force single-threaded execution (set by --deterministic).
void set_single_threaded(bool on);

// Runs body(i) for i in [0, n). Bodies must write only to disjoint,
// index-addressed slots; the loop makes no ordering guarantees beyond that.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace kindiff
