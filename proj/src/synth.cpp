#include "calib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "calib/parallel.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

void check_spec(const GeneratorSpec& spec) {
  if (spec.k < 2) {
    throw CalibError(errc::invalid_shape, "generator needs at least 2 classes");
  }
  const double floor_c = 1.0 / static_cast<double>(spec.k);
  switch (spec.law.kind) {
    case ConfidenceLawKind::uniform:
      if (!(spec.law.lo < spec.law.hi) || spec.law.lo < floor_c || spec.law.hi > 1.0) {
        throw CalibError(errc::invalid_support,
                         "uniform confidence law must sit inside [1/k, 1], got [" +
                             std::to_string(spec.law.lo) + ", " + std::to_string(spec.law.hi) + ")");
      }
      break;
    case ConfidenceLawKind::beta:
      if (!(spec.law.alpha > 0.0) || !(spec.law.beta > 0.0)) {
        throw CalibError(errc::invalid_support, "beta confidence law needs positive shape parameters");
      }
      break;
    case ConfidenceLawKind::point:
      if (spec.law.value < floor_c || spec.law.value > 1.0) {
        throw CalibError(errc::invalid_support, "point confidence " + std::to_string(spec.law.value) +
                                                    " outside [1/k, 1]");
      }
      break;
  }
  if (spec.allocation == MassAllocation::geometric &&
      (!(spec.geometric_decay > 0.0) || spec.geometric_decay > 1.0)) {
    throw CalibError(errc::invalid_argument, "geometric decay must lie in (0, 1]");
  }
  if (spec.mode == CalibrationMode::distorted &&
      (!(spec.true_temperature > 0.0) || !std::isfinite(spec.true_temperature))) {
    throw CalibError(errc::non_positive_temperature, "true temperature must be positive");
  }
}

double draw_confidence(const ConfidenceLaw& law, std::size_t k, Rng& rng) {
  switch (law.kind) {
    case ConfidenceLawKind::uniform:
      return rng.uniform(law.lo, law.hi);
    case ConfidenceLawKind::beta: {
      const double floor_c = 1.0 / static_cast<double>(k);
      return floor_c + rng.beta(law.alpha, law.beta) * (1.0 - floor_c);
    }
    case ConfidenceLawKind::point:
      return law.value;
  }
  return law.value;
}

}  // namespace

std::string describe(const GeneratorSpec& spec) {
  char law[96];
  switch (spec.law.kind) {
    case ConfidenceLawKind::uniform:
      std::snprintf(law, sizeof law, "uniform[%.4g,%.4g)", spec.law.lo, spec.law.hi);
      break;
    case ConfidenceLawKind::beta:
      std::snprintf(law, sizeof law, "beta(%.4g,%.4g)", spec.law.alpha, spec.law.beta);
      break;
    case ConfidenceLawKind::point:
      std::snprintf(law, sizeof law, "point(%.4g)", spec.law.value);
      break;
  }
  char buf[256];
  if (spec.mode == CalibrationMode::exact) {
    std::snprintf(buf, sizeof buf, "calibrated(%s, k=%zu, alloc=%s, seed=%llu)", law, spec.k,
                  spec.allocation == MassAllocation::uniform ? "uniform" : "geometric",
                  static_cast<unsigned long long>(spec.seed));
  } else {
    std::snprintf(buf, sizeof buf, "distorted(T=%.4g, %s, k=%zu, alloc=%s, seed=%llu)",
                  spec.true_temperature, law, spec.k,
                  spec.allocation == MassAllocation::uniform ? "uniform" : "geometric",
                  static_cast<unsigned long long>(spec.seed));
  }
  return buf;
}

PredictionSet gen_calibrated(const GeneratorSpec& spec, std::size_t n) {
  check_spec(spec);
  if (n == 0) throw CalibError(errc::empty_input, "cannot generate zero examples");

  const std::size_t k = spec.k;
  PredictionSet out;
  out.n = n;
  out.k = k;
  out.kind = ScoreKind::logits;
  out.scores.resize(n * k);
  out.labels.resize(n);
  out.model_name = describe(spec);
  out.dataset_name = "synthetic";

  // Geometric allocation weight normalizer: shares decay^0 .. decay^(k-2).
  double geo_norm = 0.0;
  if (spec.allocation == MassAllocation::geometric) {
    double w = 1.0;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      geo_norm += w;
      w *= spec.geometric_decay;
    }
  }

  std::vector<std::uint8_t> bad(n, 0);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(spec.seed, i));
    const double c = draw_confidence(spec.law, k, rng);
    const std::size_t top = static_cast<std::size_t>(rng.next_below(k));

    double* z = out.scores.data() + i * k;
    if (spec.allocation == MassAllocation::uniform) {
      const double other = (1.0 - c) / static_cast<double>(k - 1);
      for (std::size_t j = 0; j < k; ++j) {
        z[j] = std::log(std::max(other, kGenLogFloor));
      }
    } else {
      double w = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == top) continue;
        const double share = (1.0 - c) * (w / geo_norm);
        if (share >= c) bad[i] = 1;  // decay too shallow for this confidence
        z[j] = std::log(std::max(share, kGenLogFloor));
        w *= spec.geometric_decay;
      }
    }
    z[top] = std::log(std::max(c, kGenLogFloor));

    const double u = rng.next_double();
    if (u < c) {
      out.labels[i] = static_cast<std::int32_t>(top);
    } else {
      std::size_t other = static_cast<std::size_t>(rng.next_below(k - 1));
      if (other >= top) ++other;
      out.labels[i] = static_cast<std::int32_t>(other);
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      throw CalibError(errc::invalid_support,
                       "geometric allocation puts more mass on a non-argmax class than on the "
                       "argmax; increase decay or raise the confidence law");
    }
  }
  return out;
}

PredictionSet gen_distorted(const PredictionSet& base, double t_true) {
  if (base.kind != ScoreKind::logits) {
    throw CalibError(errc::invalid_argument, "distortion needs a logit set");
  }
  if (!(t_true > 0.0) || !std::isfinite(t_true)) {
    throw CalibError(errc::non_positive_temperature,
                     "true temperature must be a positive real, got " + std::to_string(t_true));
  }
  PredictionSet out = base;
  parallel_for(out.scores.size(), [&](std::size_t i) { out.scores[i] *= t_true; });
  return out;
}

PredictionSet generate(const GeneratorSpec& spec, std::size_t n) {
  PredictionSet base = gen_calibrated(spec, n);
  if (spec.mode == CalibrationMode::distorted) {
    PredictionSet out = gen_distorted(base, spec.true_temperature);
    out.model_name = describe(spec);
    return out;
  }
  return base;
}

// ---------------------------------------------------------------------------
// Brute-force oracle. Everything below is a deliberate re-transcription of
// the estimator definition with explicit loops; it shares no helpers with
// metrics.ece and must stay that way, since tests hold the two paths to
// bit-exact agreement.
// ---------------------------------------------------------------------------

namespace {

struct OraclePair {
  double value = 0.0;
  std::uint8_t outcome = 0;
};

double oracle_binned(const std::vector<OraclePair>& pairs, BinningScheme scheme, std::size_t m,
                     EceNorm norm) {
  const std::size_t n = pairs.size();
  if (m == 0) throw CalibError(errc::invalid_argument, "num_bins must be at least 1");

  std::vector<std::size_t> bin(n, 0);
  if (scheme == BinningScheme::equal_width) {
    for (std::size_t t = 0; t < n; ++t) {
      auto b = static_cast<std::size_t>(std::floor(pairs[t].value * static_cast<double>(m)));
      if (b >= m) b = m - 1;
      bin[t] = b;
    }
  } else {
    if (m > n) {
      throw CalibError(errc::too_many_bins, "equal_mass needs num_bins <= " + std::to_string(n) +
                                                ", got " + std::to_string(m));
    }
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t t = 0; t < n; ++t) order[t] = {pairs[t].value, t};
    std::sort(order.begin(), order.end());
    const std::size_t base = n / m;
    const std::size_t extra = n % m;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      for (std::size_t j = 0; j < size; ++j) bin[order[pos + j].second] = b;
      pos += size;
    }
  }

  double total = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    double sum_value = 0.0;
    double sum_outcome = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (bin[t] == b) {
        sum_value += pairs[t].value;
        sum_outcome += pairs[t].outcome ? 1.0 : 0.0;
        count += 1;
      }
    }
    if (count == 0) continue;
    const double cnt = static_cast<double>(count);
    const double accuracy = sum_outcome / cnt;
    const double confidence = sum_value / cnt;
    const double gap = accuracy - confidence;
    const double weight = cnt / static_cast<double>(n);
    if (norm == EceNorm::l1) {
      total += weight * std::fabs(gap);
    } else {
      total += weight * gap * gap;
    }
  }
  return (norm == EceNorm::rms) ? std::sqrt(total) : total;
}

std::vector<double> oracle_probabilities(const PredictionSet& preds) {
  const std::size_t n = preds.n;
  const std::size_t k = preds.k;
  std::vector<double> probs(n * k);
  if (preds.kind == ScoreKind::probabilities) {
    for (std::size_t i = 0; i < n * k; ++i) probs[i] = preds.scores[i];
    return probs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = preds.scores.data() + i * k;
    double* p = probs.data() + i * k;
    double m = z[0];
    for (std::size_t c = 1; c < k; ++c) {
      if (z[c] > m) m = z[c];
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      p[c] = std::exp(z[c] - m);
      sum += p[c];
    }
    for (std::size_t c = 0; c < k; ++c) p[c] /= sum;
  }
  return probs;
}

}  // namespace

double brute_force_ece_oracle(const PredictionSet& preds, const EceConfig& cfg) {
  if (preds.n == 0) throw CalibError(errc::empty_input, "prediction set has no examples");
  const std::size_t n = preds.n;
  const std::size_t k = preds.k;
  const std::vector<double> probs = oracle_probabilities(preds);

  switch (cfg.aggregation) {
    case EceAggregation::top_label: {
      std::vector<OraclePair> pairs(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = probs.data() + i * k;
        double best = p[0];
        for (std::size_t c = 1; c < k; ++c) {
          if (p[c] > best) best = p[c];
        }
        pairs[i].value = best;
        pairs[i].outcome = (p[static_cast<std::size_t>(preds.labels[i])] == best) ? 1 : 0;
      }
      return oracle_binned(pairs, cfg.binning.scheme, cfg.binning.num_bins, cfg.norm);
    }
    case EceAggregation::class_wise: {
      double total = 0.0;
      std::vector<OraclePair> pairs(n);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
          pairs[i].value = probs[i * k + c];
          pairs[i].outcome = (static_cast<std::size_t>(preds.labels[i]) == c) ? 1 : 0;
        }
        total += oracle_binned(pairs, cfg.binning.scheme, cfg.class_wise_bins, cfg.norm);
      }
      return total / static_cast<double>(k);
    }
    case EceAggregation::all_label: {
      std::vector<OraclePair> pairs(n * k);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
          pairs[i * k + c].value = probs[i * k + c];
          pairs[i * k + c].outcome = (static_cast<std::size_t>(preds.labels[i]) == c) ? 1 : 0;
        }
      }
      return oracle_binned(pairs, cfg.binning.scheme, cfg.binning.num_bins, cfg.norm);
    }
  }
  throw CalibError(errc::invalid_argument, "unknown aggregation");
}

}  // namespace calib
