#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "calib/core.hpp"

namespace calib {

// Temperature convention used throughout: scaled logits are z / T, so T > 1
// softens an overconfident model and T < 1 sharpens an underconfident one.
inline constexpr double kTemperatureMin = 0.05;
inline constexpr double kTemperatureMax = 20.0;

/// Floor applied to probabilities before taking logs (NLL, logits_of).
inline constexpr double kLogClamp = 1e-12;

struct Temperature {
  double value = 1.0;
  double final_nll = 0.0;  // mean NLL at the fitted temperature
  int iterations = 0;
  bool hit_boundary = false;
};

/// Returns the set as probabilities: row-wise softmax for logits (max
/// subtracted for stability), pass-through copy for probability inputs.
PredictionSet probabilities_of(const PredictionSet& preds);

/// Returns the set as logits: log(max(p, 1e-12)) for probabilities,
/// pass-through copy for logit inputs.
PredictionSet logits_of(const PredictionSet& preds);

/// Softmax(z / T) over the set's logits; probability inputs go through
/// logits_of first. T == 1 is the identity on probabilities.
PredictionSet apply_temperature(const PredictionSet& preds, double temperature);

/// Mean NLL of the set after scaling by T; the objective fit_temperature
/// minimizes. Computed on logits without any clamping.
double mean_nll_at_temperature(const PredictionSet& preds, double temperature);

/// Minimizes mean NLL over T in [0.05, 20] by golden-section search on log T
/// to an absolute tolerance of 1e-5 in log T. hit_boundary is set when the
/// optimum lands on either end of the range (the value snaps to the bound).
Temperature fit_temperature(const PredictionSet& fit_set);

/// fit_temperature applied to the given set itself; the fitted T read as a
/// diagnostic (above 1 means overconfident, below 1 underconfident).
Temperature confidence_factor(const PredictionSet& preds);

/// Splits into (fit, eval): indices are shuffled by the seeded generator and
/// the first floor(fraction * n) go to fit. Labels, ids and metadata follow
/// their rows.
std::pair<PredictionSet, PredictionSet> split_holdout(const PredictionSet& preds, double fraction,
                                                      std::uint64_t seed);

/// Restricts to the classes in keep (in keep order), remapping labels to
/// subset indices. Returns logits; renormalization over the subset happens on
/// the next conversion to probabilities. Every label must be in keep.
PredictionSet subset_classes(const PredictionSet& preds, const std::vector<std::int32_t>& keep);

}  // namespace calib
