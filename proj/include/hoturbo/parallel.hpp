#pragma once

#include <cstddef>
#include <functional>

namespace hoturbo {

/// Worker count from HO_TURBO_THREADS (default: hardware concurrency, min 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Exceptions
/// from any iteration are rethrown (the lowest index wins) after all workers
/// have joined. Callers must write results into per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hoturbo
