#pragma once

#include <string>
#include <vector>

#include "calib/core.hpp"

namespace calib {

/// Error rate among the ceil((1 - r) * n) highest-confidence examples, ties
/// broken by original index (lowest retained first). r = 1 retains nothing
/// and returns 0 by convention.
double risk_at_coverage(const TopLabelView& view, double abstention_rate);

/// cost(r, rho) = rho * r + (1 - r) * risk_at_coverage(r), with the
/// misclassification cost normalized to 1 and rho the abstention cost ratio.
double selective_cost(const TopLabelView& view, double abstention_rate, double cost_ratio);

struct CostPlane {
  std::vector<double> cost_ratios;      // rho axis, ascending
  std::vector<double> abstention_rates; // r axis, ascending
  std::vector<double> relative_cost;    // row-major [r][rho]: cost_A / cost_B
  std::vector<double> cost_a;           // same layout
  std::vector<double> cost_b;
  std::string model_a;
  std::string model_b;

  double at(std::size_t r_idx, std::size_t rho_idx) const {
    return relative_cost[r_idx * cost_ratios.size() + rho_idx];
  }
};

/// Relative cost matrix cost_A / cost_B over the grid. Cells with
/// cost_B = 0 are 1 when cost_A is also 0 and +infinity otherwise.
CostPlane cost_plane(const TopLabelView& view_a, const TopLabelView& view_b,
                     std::vector<double> cost_ratios, std::vector<double> abstention_rates,
                     std::string model_a = "A", std::string model_b = "B");

}  // namespace calib
