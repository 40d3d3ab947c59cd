#pragma once

#include <cstdint>
#include <numeric>

namespace igc {

using i64 = std::int64_t;
using u64 = std::uint64_t;

inline i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }

// Nearest multiple of `m`, ties rounded up. Result is at least `m` when x > 0.
inline i64 round_to_multiple(double x, i64 m) {
  if (m <= 0) return static_cast<i64>(x);
  const double q = x / static_cast<double>(m);
  i64 lo = static_cast<i64>(q) * m;
  i64 hi = lo + m;
  if (x - static_cast<double>(lo) >= static_cast<double>(hi) - x) return hi;
  return lo;
}

}  // namespace igc
