#pragma once

#include <cstddef>
#include <functional>

namespace simret {

// Process caps parallelism here; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs fn(i) for i in [0, n). Work items only ever write to their own
// output slots, so the result is identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace simret
