#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cdrp {

/// Worker count used by parallel_for. 0 restores the hardware default.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(begin, end) over disjoint chunks covering [0, n). Chunking varies with
/// the thread count, so bodies must write results by index and never accumulate
/// across indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

/// out[i] = f(i) for i < n, evaluated in parallel. Reduce the result serially for
/// thread-count independent sums.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = f(i);
  });
  return out;
}

}  // namespace cdrp
