#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flap::core {

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// Splits [0, n) into at most n_blocks contiguous ranges. The decomposition
// depends only on (n, n_blocks), never on the thread count, so reductions
// that merge per-block results in block order are bitwise reproducible.
inline std::vector<BlockRange> partition_blocks(std::size_t n, std::size_t n_blocks) {
  std::vector<BlockRange> out;
  if (n == 0 || n_blocks == 0) return out;
  if (n_blocks > n) n_blocks = n;
  const std::size_t base = n / n_blocks;
  const std::size_t extra = n % n_blocks;
  std::size_t at = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    out.push_back({at, at + len});
    at += len;
  }
  return out;
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(block_index) for every block; OpenMP when parallel, plain loop
// otherwise. fn must only touch block-local state.
template <class Fn>
void for_each_block(std::size_t n_blocks, bool parallel, Fn&& fn) {
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
    for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
      fn(static_cast<std::size_t>(b));
    }
    return;
#endif
  }
  for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
}

// Element-wise parallel loop; every iteration must write only to its own
// output slot, which keeps serial and parallel execution bitwise identical.
template <class Fn>
void for_each_index(std::size_t n, bool parallel, Fn&& fn) {
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace flap::core
