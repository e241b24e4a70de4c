#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace calib {

// Parallel helpers with one hard rule: results must not depend on the thread
// count. Sums are accumulated in fixed blocks of kReduceBlock elements and the
// block partials are combined serially in block order, so a run with 1 thread
// and a run with 64 produce bit-identical doubles.
inline constexpr std::size_t kReduceBlock = 8192;

template <class F>
double blocked_sum(std::size_t n, F&& term) {
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// Runs body(i) for i in [0, n); bodies must write to disjoint slots.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace calib
