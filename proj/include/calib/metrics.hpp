#pragma once

#include <cstddef>
#include <vector>

#include "calib/core.hpp"

namespace calib {

enum class EceNorm { l1, l2, rms };

enum class EceAggregation { top_label, class_wise, all_label };

struct EceConfig {
  BinningSpec binning{BinningScheme::equal_mass, 100};
  EceNorm norm = EceNorm::l1;
  EceAggregation aggregation = EceAggregation::top_label;
  std::size_t class_wise_bins = 15;  // bins per class for class_wise
};

/// Binned calibration error. Per bin: weight |B|/n times the gap between mean
/// indicator and mean value, |gap| for l1 and gap^2 for l2; rms is the square
/// root of the l2 total.
///   top_label: pairs are (confidence, correct) from the top-label view.
///   class_wise: the same computation per class c over (p_c, label == c) with
///     class_wise_bins bins, averaged over classes.
///   all_label: all n*k (p_c, label == c) pairs pooled into one computation.
double ece(const PredictionSet& preds, const EceConfig& cfg);

/// Mean negative log-likelihood, -log(max(p_label, 1e-12)) averaged over rows.
double nll(const PredictionSet& preds);

/// Mean squared distance between the probability row and the one-hot label,
/// summed over all k classes; ranges over [0, 2].
double brier(const PredictionSet& preds);

/// Classification error of the top-label view (1 - accuracy).
double classification_error(const PredictionSet& preds);

struct ReliabilityData {
  BinStats bins;                       // reliability diagram bins
  std::vector<std::size_t> histogram;  // confidence counts over equal-width cells
  std::size_t n = 0;
};

/// Bin stats for a reliability diagram plus a confidence histogram over
/// hist_bins equal-width cells.
ReliabilityData reliability_data(const PredictionSet& preds, const BinningSpec& spec,
                                 std::size_t hist_bins);

}  // namespace calib
