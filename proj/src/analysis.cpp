#include "calib/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calib/parallel.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// OLS on precomputed logs; returns false when all x coincide.
bool ols(const std::vector<double>& lx, const std::vector<double>& ly,
         const std::vector<std::size_t>& idx, LogFit& fit) {
  const double n = static_cast<double>(idx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i : idx) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i : idx) {
    const double dx = lx[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ly[i] - my);
  }
  if (sxx == 0.0) return false;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return true;
}

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::size_t resamples, std::uint64_t seed) {
  const std::size_t n = x.size();
  if (y.size() != n) throw CalibError(errc::invalid_shape, "x and y lengths differ");
  if (n < 3) {
    throw CalibError(errc::underdetermined, "need at least 3 points, got " + std::to_string(n));
  }
  if (resamples < 2) throw CalibError(errc::invalid_argument, "need at least 2 bootstrap resamples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw CalibError(errc::non_positive_coordinate,
                       "power-law fit needs strictly positive finite coordinates (point " +
                           std::to_string(i) + ")");
    }
  }

  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  LogFit point;
  if (!ols(lx, ly, all, point)) {
    throw CalibError(errc::underdetermined, "all x coincide");
  }

  PowerLawFit out;
  out.k = point.slope;
  out.a = std::exp(point.intercept);
  out.resamples = resamples;
  out.seed = seed;

  std::vector<double> boot_a(resamples), boot_k(resamples);
  parallel_for(resamples, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::size_t> idx(n);
    LogFit fit;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::size_t>(rng.next_below(n));
      if (ols(lx, ly, idx, fit)) {
        boot_k[b] = fit.slope;
        boot_a[b] = std::exp(fit.intercept);
        return;
      }
    }
    // Effectively unreachable once the point fit succeeded; mark with the
    // point estimate rather than aborting a long run.
    boot_k[b] = point.slope;
    boot_a[b] = std::exp(point.intercept);
  });

  out.a_lo = std::min(percentile(boot_a, 0.025), out.a);
  out.a_hi = std::max(percentile(boot_a, 0.975), out.a);
  out.k_lo = std::min(percentile(boot_k, 0.025), out.k);
  out.k_hi = std::max(percentile(boot_k, 0.975), out.k);
  return out;
}

LinearResiduals residualize(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw CalibError(errc::invalid_shape, "x and y lengths differ");
  if (n < 2) {
    throw CalibError(errc::underdetermined, "need at least 2 points, got " + std::to_string(n));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y[i] - my);
  }
  if (sxx == 0.0) throw CalibError(errc::underdetermined, "all x coincide");

  LinearResiduals out;
  out.beta1 = sxy / sxx;
  out.beta0 = my - out.beta1 * mx;
  out.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.residuals[i] = y[i] - (out.beta0 + out.beta1 * x[i]);
  }
  return out;
}

std::vector<std::size_t> pareto_front(std::span<const double> error,
                                      std::span<const double> calibration) {
  const std::size_t n = error.size();
  if (calibration.size() != n) throw CalibError(errc::invalid_shape, "coordinate lengths differ");
  if (n == 0) throw CalibError(errc::empty_input, "no points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(error[i]) || !std::isfinite(calibration[i])) {
      throw CalibError(errc::invalid_argument, "point " + std::to_string(i) + " is not finite");
    }
  }

  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < n; ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < n && !dominated; ++j) {
      if (j == i) continue;
      const bool leq = error[j] <= error[i] && calibration[j] <= calibration[i];
      const bool strict = error[j] < error[i] || calibration[j] < calibration[i];
      dominated = leq && strict;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

}  // namespace calib
