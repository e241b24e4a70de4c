#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "calib/error.hpp"

namespace calib {

enum class ScoreKind { logits, probabilities };

/// A batch of classifier outputs: n examples, k classes, row-major scores.
/// Construct through validate(); the invariants below are assumed everywhere.
struct PredictionSet {
  std::size_t n = 0;
  std::size_t k = 0;
  ScoreKind kind = ScoreKind::probabilities;
  std::vector<double> scores;            // n * k, all finite
  std::vector<std::int32_t> labels;      // size n, each in [0, k)
  std::vector<std::string> example_ids;  // empty, or size n with distinct ids
  std::string model_name;
  std::string dataset_name;

  std::span<const double> row(std::size_t i) const { return {scores.data() + i * k, k}; }
  std::span<double> row(std::size_t i) { return {scores.data() + i * k, k}; }
};

/// Checks shapes, finiteness and label range, and for probability inputs
/// renormalizes rows whose sum is within 1e-6 of 1 (rejects anything further
/// off). Returns the validated set.
PredictionSet validate(std::vector<double> scores, std::size_t n, std::size_t k, ScoreKind kind,
                       std::vector<std::int32_t> labels, std::vector<std::string> example_ids = {},
                       std::string model_name = "", std::string dataset_name = "");

inline constexpr double kProbSumTolerance = 1e-6;

/// Per-example top-label summary: predicted confidence max_c p_c and whether
/// the true label attains the row maximum (ties count as correct).
struct TopLabelView {
  std::vector<double> confidence;
  std::vector<std::uint8_t> correct;

  std::size_t size() const { return confidence.size(); }
};

TopLabelView top_label_view(const PredictionSet& preds);

enum class BinningScheme { equal_width, equal_mass };

struct BinningSpec {
  BinningScheme scheme = BinningScheme::equal_mass;
  std::size_t num_bins = 100;
};

struct BinStats {
  struct Bin {
    std::size_t count = 0;
    double mean_confidence = 0.0;  // 0 when the bin is empty
    double mean_accuracy = 0.0;    // 0 when the bin is empty
    double lo = 0.0;               // nominal edge (equal_width) or observed min (equal_mass)
    double hi = 0.0;
  };
  std::vector<Bin> bins;
};

struct BinAssignment {
  std::vector<std::uint32_t> bin_of;  // size n, values in [0, num_bins)
  BinStats stats;
};

/// Assigns each (confidence, correct) pair to a bin.
///   equal_width: bin floor(c * m), clamped to m - 1 so c == 1 lands in the
///     top bin (right-closed).
///   equal_mass: sort by (confidence, original index) ascending, split into m
///     contiguous groups; the first n mod m groups get one extra element.
///     Ties are resolved by original index, which keeps runs deterministic.
BinAssignment bin_assign(const TopLabelView& view, const BinningSpec& spec);

}  // namespace calib
