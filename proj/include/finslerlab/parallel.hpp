#pragma once

#include <cstddef>
#include <functional>

namespace finslerlab {

/// Worker count: hardware concurrency, capped by FINSLERLAB_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, count). Results must be written to per-index slots; if any call
/// throws, the exception of the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace finslerlab
