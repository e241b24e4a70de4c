#pragma once

#include <cstdint>
#include <string>

#include "calib/core.hpp"
#include "calib/metrics.hpp"

namespace calib {

enum class ConfidenceLawKind { uniform, beta, point };

/// Law for the drawn top-label confidence C. Support must stay inside
/// [1/k, 1]: uniform draws from [lo, hi), beta(a, b) is rescaled onto
/// [1/k, 1], point is a point mass.
struct ConfidenceLaw {
  ConfidenceLawKind kind = ConfidenceLawKind::uniform;
  double lo = 0.5;
  double hi = 1.0;
  double alpha = 2.0;
  double beta = 2.0;
  double value = 0.75;

  static ConfidenceLaw uniform_law(double lo, double hi) {
    ConfidenceLaw law;
    law.kind = ConfidenceLawKind::uniform;
    law.lo = lo;
    law.hi = hi;
    return law;
  }
  static ConfidenceLaw beta_law(double alpha, double beta) {
    ConfidenceLaw law;
    law.kind = ConfidenceLawKind::beta;
    law.alpha = alpha;
    law.beta = beta;
    return law;
  }
  static ConfidenceLaw point_law(double value) {
    ConfidenceLaw law;
    law.kind = ConfidenceLawKind::point;
    law.value = value;
    return law;
  }
};

enum class MassAllocation { uniform, geometric };

enum class CalibrationMode { exact, distorted };

struct GeneratorSpec {
  ConfidenceLaw law{};
  std::size_t k = 2;
  MassAllocation allocation = MassAllocation::uniform;
  double geometric_decay = 0.5;        // weight ratio between consecutive non-argmax classes
  CalibrationMode mode = CalibrationMode::exact;
  double true_temperature = 1.0;       // distorted mode only
  std::uint64_t seed = 0;
};

/// One-line description of a spec, used in reports.
std::string describe(const GeneratorSpec& spec);

/// Floor for the generator's emitted log-probabilities. Far below the softmax
/// round-trip resolution, so a row with all mass on one class converts back to
/// confidence exactly 1.0.
inline constexpr double kGenLogFloor = 1e-300;

/// Draws an exactly calibrated prediction set: per example, confidence C from
/// the law, a uniformly chosen argmax class carrying probability C, remaining
/// mass spread over the other classes per the allocation rule, and the label
/// equal to the argmax with probability C (else uniform among the others).
/// Emits log-probabilities as logits. Example i uses the derived stream
/// derive_seed(spec.seed, i), so generation parallelizes without changing
/// output.
PredictionSet gen_calibrated(const GeneratorSpec& spec, std::size_t n);

/// Miscalibrates a logit set so that re-fitting a temperature recovers
/// t_true: scales logits by t_true (the inverse of dividing by 1/t_true).
/// Labels and argmax sets are unchanged.
PredictionSet gen_distorted(const PredictionSet& base, double t_true);

/// gen_calibrated, plus distortion when spec.mode is distorted.
PredictionSet generate(const GeneratorSpec& spec, std::size_t n);

/// Literal transcription of the binned calibration error, kept deliberately
/// separate from metrics.ece (its own softmax, sort and loops, no shared
/// helpers). Serial; used as the equivalence oracle in tests and benchmarks.
double brute_force_ece_oracle(const PredictionSet& preds, const EceConfig& cfg);

}  // namespace calib
