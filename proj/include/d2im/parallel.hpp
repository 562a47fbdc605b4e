#pragma once

#include <cstddef>
#include <functional>

namespace d2im {

/// Caps internal parallelism. 0 or 1 means single threaded (the default).
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once and bodies must only write to per-index state, so results do
/// not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace d2im
