#pragma once

#include <cstddef>
#include <functional>

namespace wkam {

/// Caps the number of worker threads used by parallel loops (>= 1).
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n) across the configured workers using a static
/// contiguous partition. Callers write only to index-owned slots, so results
/// never depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace wkam
