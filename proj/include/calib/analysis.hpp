#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "calib/error.hpp"

namespace calib {

struct PowerLawFit {
  double a = 0.0;  // coefficient of y = a * x^k, always positive
  double k = 0.0;  // exponent
  double a_lo = 0.0, a_hi = 0.0;  // 95% bootstrap interval for a
  double k_lo = 0.0, k_hi = 0.0;  // 95% bootstrap interval for k
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
};

/// Fits y = a * x^k by OLS on (log x, log y); intervals are percentile
/// bootstrap (resample points with replacement, refit), widened if needed to
/// contain the point estimate. Needs at least 3 points, not all at the same
/// x, all coordinates strictly positive.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::size_t resamples = 2000, std::uint64_t seed = 0);

struct LinearResiduals {
  double beta0 = 0.0;
  double beta1 = 0.0;
  std::vector<double> residuals;  // y_i - (beta0 + beta1 * x_i), input order
};

/// OLS with intercept; residuals sum to 0 (up to rounding).
LinearResiduals residualize(std::span<const double> x, std::span<const double> y);

/// Indices (ascending) of points not dominated in (error, calibration), both
/// lower-is-better. A point is dominated when another is <= in both
/// coordinates and < in at least one; exact duplicates are all retained.
std::vector<std::size_t> pareto_front(std::span<const double> error,
                                      std::span<const double> calibration);

}  // namespace calib
