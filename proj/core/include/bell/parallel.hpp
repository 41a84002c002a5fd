#pragma once

#include <cstddef>
#include <functional>

namespace bell {

/// Worker count: BELL_LAB_THREADS if set to a positive integer (capped at the
/// hardware concurrency), otherwise the hardware concurrency. At least 1.
[[nodiscard]] unsigned worker_count();

/// Splits [0, n) into contiguous chunks, one per worker, and runs
/// body(begin, end, chunk_index). Chunk boundaries depend only on (n, workers).
/// The first exception thrown by a worker is rethrown after all join.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace bell
