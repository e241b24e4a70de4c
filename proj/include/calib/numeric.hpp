#pragma once

#include <cmath>
#include <cstdint>

namespace calib {

// floor/ceil with a snap window: products like 0.2 * 10 land a few ulp off an
// integer, and a raw floor would then be off by one. Anything within 1e-9
// (relative for large values) of an integer is treated as that integer.
inline std::int64_t snap_floor(double x) {
  double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9 * std::fmax(1.0, std::fabs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

inline std::int64_t snap_ceil(double x) {
  double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9 * std::fmax(1.0, std::fabs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace calib
