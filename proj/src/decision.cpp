#include "calib/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "calib/numeric.hpp"

namespace calib {

namespace {

// Examples ordered by (confidence descending, original index ascending);
// wrong_prefix[t] counts errors among the first t of that order.
struct RetentionTable {
  std::vector<std::size_t> wrong_prefix;
  std::size_t n = 0;
};

RetentionTable build_table(const TopLabelView& view) {
  const std::size_t n = view.size();
  if (n == 0) throw CalibError(errc::empty_input, "empty view");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (view.confidence[a] != view.confidence[b]) return view.confidence[a] > view.confidence[b];
    return a < b;
  });
  RetentionTable table;
  table.n = n;
  table.wrong_prefix.resize(n + 1, 0);
  for (std::size_t t = 0; t < n; ++t) {
    table.wrong_prefix[t + 1] = table.wrong_prefix[t] + (view.correct[order[t]] ? 0 : 1);
  }
  return table;
}

double risk_from_table(const RetentionTable& table, double r) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw CalibError(errc::invalid_argument, "abstention rate must lie in [0, 1], got " +
                                                 std::to_string(r));
  }
  auto retained = static_cast<std::size_t>(
      std::max<std::int64_t>(0, snap_ceil((1.0 - r) * static_cast<double>(table.n))));
  if (retained > table.n) retained = table.n;
  if (retained == 0) return 0.0;
  return static_cast<double>(table.wrong_prefix[retained]) / static_cast<double>(retained);
}

double cost_from_table(const RetentionTable& table, double r, double rho) {
  if (!(rho >= 0.0)) {
    throw CalibError(errc::invalid_argument, "cost ratio must be nonnegative, got " +
                                                 std::to_string(rho));
  }
  return rho * r + (1.0 - r) * risk_from_table(table, r);
}

}  // namespace

double risk_at_coverage(const TopLabelView& view, double abstention_rate) {
  return risk_from_table(build_table(view), abstention_rate);
}

double selective_cost(const TopLabelView& view, double abstention_rate, double cost_ratio) {
  return cost_from_table(build_table(view), abstention_rate, cost_ratio);
}

CostPlane cost_plane(const TopLabelView& view_a, const TopLabelView& view_b,
                     std::vector<double> cost_ratios, std::vector<double> abstention_rates,
                     std::string model_a, std::string model_b) {
  if (cost_ratios.empty() || abstention_rates.empty()) {
    throw CalibError(errc::invalid_argument, "cost plane grids must be nonempty");
  }
  if (!std::is_sorted(cost_ratios.begin(), cost_ratios.end()) ||
      !std::is_sorted(abstention_rates.begin(), abstention_rates.end())) {
    throw CalibError(errc::invalid_argument, "cost plane grids must be sorted ascending");
  }

  RetentionTable table_a = build_table(view_a);
  RetentionTable table_b = build_table(view_b);

  CostPlane plane;
  plane.cost_ratios = std::move(cost_ratios);
  plane.abstention_rates = std::move(abstention_rates);
  plane.model_a = std::move(model_a);
  plane.model_b = std::move(model_b);
  const std::size_t rows = plane.abstention_rates.size();
  const std::size_t cols = plane.cost_ratios.size();
  plane.relative_cost.resize(rows * cols);
  plane.cost_a.resize(rows * cols);
  plane.cost_b.resize(rows * cols);

  for (std::size_t ri = 0; ri < rows; ++ri) {
    const double r = plane.abstention_rates[ri];
    for (std::size_t ci = 0; ci < cols; ++ci) {
      const double rho = plane.cost_ratios[ci];
      const double ca = cost_from_table(table_a, r, rho);
      const double cb = cost_from_table(table_b, r, rho);
      plane.cost_a[ri * cols + ci] = ca;
      plane.cost_b[ri * cols + ci] = cb;
      double rel;
      if (cb == 0.0) {
        rel = (ca == 0.0) ? 1.0 : std::numeric_limits<double>::infinity();
      } else {
        rel = ca / cb;
      }
      plane.relative_cost[ri * cols + ci] = rel;
    }
  }
  return plane;
}

}  // namespace calib
