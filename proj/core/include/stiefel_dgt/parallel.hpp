#pragma once

#include <functional>

namespace stiefel_dgt {

// Per-run parallelism cap: 1 by default, STIEFEL_DGT_THREADS overrides
// (0 = hardware concurrency).
int configured_threads();
void set_thread_cap(int threads);

// Runs fn(i) for i in [0, count). Each index writes only its own slot, so the
// result is schedule-independent.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace stiefel_dgt
