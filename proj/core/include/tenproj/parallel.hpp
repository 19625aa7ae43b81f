#ifndef TENPROJ_PARALLEL_HPP
#define TENPROJ_PARALLEL_HPP

#include <algorithm>
#include <thread>
#include <vector>

#include "tenproj/types.hpp"

namespace tenproj {

/// Splits [0, n) into at most `threads` contiguous chunks and calls
/// fn(chunk, begin, end) for each; chunk 0 runs on the caller. Chunk
/// boundaries depend only on (n, threads), so callers that reduce per-chunk
/// partials in chunk order get reproducible results.
template <typename Fn>
int parallel_chunks(Index n, int threads, Fn&& fn) {
  const int chunks = static_cast<int>(std::clamp<Index>(std::min<Index>(threads, n), 1, n > 0 ? n : 1));
  auto bounds = [&](int c) { return std::pair<Index, Index>{n * c / chunks, n * (c + 1) / chunks}; };
  if (chunks == 1) {
    fn(0, Index{0}, n);
    return 1;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(chunks - 1));
  for (int c = 1; c < chunks; ++c) {
    workers.emplace_back([&fn, c, b = bounds(c)] { fn(c, b.first, b.second); });
  }
  auto b0 = bounds(0);
  fn(0, b0.first, b0.second);
  return chunks;
}

}  // namespace tenproj

#endif  // TENPROJ_PARALLEL_HPP
