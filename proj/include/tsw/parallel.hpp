#pragma once

#include <cstddef>
#include <functional>

namespace tsw {

// Runs fn(i) for i in [0, count). Work is split into contiguous blocks over
// `threads` workers; callers must make iterations independent. Outputs should
// be written into per-index slots so that reductions can run in index order
// afterwards, keeping results identical for every thread count.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace tsw
