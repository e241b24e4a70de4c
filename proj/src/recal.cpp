#include "calib/recal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/numeric.hpp"
#include "calib/parallel.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

// Row softmax, written once and reused verbatim: subtract the row max (first
// scan), exponentiate, sum in ascending class order, divide.
void softmax_row(const double* z, double* p, std::size_t k) {
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

double mean_nll_of_logits(const PredictionSet& logits, double temperature) {
  const std::size_t k = logits.k;
  double total = blocked_sum(logits.n, [&](std::size_t i) {
    const double* z = logits.scores.data() + i * k;
    double m = z[0] / temperature;
    for (std::size_t c = 1; c < k; ++c) {
      double s = z[c] / temperature;
      if (s > m) m = s;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] / temperature - m);
    double lse = m + std::log(sum);
    return lse - z[static_cast<std::size_t>(logits.labels[i])] / temperature;
  });
  return total / static_cast<double>(logits.n);
}

PredictionSet take_rows(const PredictionSet& preds, const std::vector<std::size_t>& rows) {
  PredictionSet out;
  out.n = rows.size();
  out.k = preds.k;
  out.kind = preds.kind;
  out.model_name = preds.model_name;
  out.dataset_name = preds.dataset_name;
  out.scores.resize(out.n * out.k);
  out.labels.resize(out.n);
  if (!preds.example_ids.empty()) out.example_ids.resize(out.n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t src = rows[i];
    std::copy_n(preds.scores.data() + src * preds.k, preds.k, out.scores.data() + i * preds.k);
    out.labels[i] = preds.labels[src];
    if (!preds.example_ids.empty()) out.example_ids[i] = preds.example_ids[src];
  }
  return out;
}

}  // namespace

PredictionSet probabilities_of(const PredictionSet& preds) {
  if (preds.kind == ScoreKind::probabilities) return preds;
  PredictionSet out = preds;
  out.kind = ScoreKind::probabilities;
  parallel_for(preds.n, [&](std::size_t i) {
    softmax_row(preds.scores.data() + i * preds.k, out.scores.data() + i * preds.k, preds.k);
  });
  return out;
}

PredictionSet logits_of(const PredictionSet& preds) {
  if (preds.kind == ScoreKind::logits) return preds;
  PredictionSet out = preds;
  out.kind = ScoreKind::logits;
  parallel_for(preds.n * preds.k, [&](std::size_t i) {
    out.scores[i] = std::log(std::max(preds.scores[i], kLogClamp));
  });
  return out;
}

PredictionSet apply_temperature(const PredictionSet& preds, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw CalibError(errc::non_positive_temperature,
                     "temperature must be a positive real, got " + std::to_string(temperature));
  }
  if (temperature == 1.0) return probabilities_of(preds);
  PredictionSet logits = logits_of(preds);
  parallel_for(logits.n * logits.k, [&](std::size_t i) { logits.scores[i] /= temperature; });
  return probabilities_of(logits);
}

double mean_nll_at_temperature(const PredictionSet& preds, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw CalibError(errc::non_positive_temperature,
                     "temperature must be a positive real, got " + std::to_string(temperature));
  }
  return mean_nll_of_logits(logits_of(preds), temperature);
}

Temperature fit_temperature(const PredictionSet& fit_set) {
  if (fit_set.n == 0) throw CalibError(errc::empty_fit_set, "cannot fit a temperature to zero examples");
  PredictionSet logits = logits_of(fit_set);

  const double lo = std::log(kTemperatureMin);
  const double hi = std::log(kTemperatureMax);
  const double tol = 1e-5;  // absolute, in log T
  const double invphi = 0.6180339887498949;
  const double invphi2 = 0.3819660112501051;

  auto objective = [&](double x) { return mean_nll_of_logits(logits, std::exp(x)); };

  double a = lo, b = hi;
  double h = b - a;
  double x1 = a + invphi2 * h;
  double x2 = a + invphi * h;
  double f1 = objective(x1);
  double f2 = objective(x2);
  int iterations = 0;
  while (h > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      h = b - a;
      x1 = a + invphi2 * h;
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      h = b - a;
      x2 = a + invphi * h;
      f2 = objective(x2);
    }
    ++iterations;
  }
  double x = (f1 < f2) ? 0.5 * (a + x2) : 0.5 * (x1 + b);

  Temperature out;
  const bool at_lo = (x - lo) <= 5.0 * tol;
  const bool at_hi = (hi - x) <= 5.0 * tol;
  out.hit_boundary = at_lo || at_hi;
  out.value = at_lo ? kTemperatureMin : (at_hi ? kTemperatureMax : std::exp(x));
  out.final_nll = mean_nll_of_logits(logits, out.value);
  out.iterations = iterations;
  return out;
}

Temperature confidence_factor(const PredictionSet& preds) { return fit_temperature(preds); }

std::pair<PredictionSet, PredictionSet> split_holdout(const PredictionSet& preds, double fraction,
                                                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw CalibError(errc::degenerate_split,
                     "fraction must lie strictly between 0 and 1, got " + std::to_string(fraction));
  }
  if (preds.n < 2) throw CalibError(errc::degenerate_split, "need at least 2 examples to split");
  const auto n_fit = static_cast<std::size_t>(snap_floor(fraction * static_cast<double>(preds.n)));
  if (n_fit == 0 || n_fit == preds.n) {
    throw CalibError(errc::degenerate_split, "fraction " + std::to_string(fraction) + " of " +
                                                 std::to_string(preds.n) +
                                                 " examples leaves an empty split");
  }

  std::vector<std::size_t> order(preds.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.data(), order.size());

  std::vector<std::size_t> fit_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_fit));
  std::vector<std::size_t> eval_rows(order.begin() + static_cast<std::ptrdiff_t>(n_fit), order.end());
  return {take_rows(preds, fit_rows), take_rows(preds, eval_rows)};
}

PredictionSet subset_classes(const PredictionSet& preds, const std::vector<std::int32_t>& keep) {
  if (keep.empty()) throw CalibError(errc::empty_subset, "keep set is empty");
  if (keep.size() < 2) throw CalibError(errc::invalid_shape, "subset must keep at least 2 classes");
  std::vector<std::int32_t> new_index(preds.k, -1);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    std::int32_t c = keep[j];
    if (c < 0 || static_cast<std::size_t>(c) >= preds.k) {
      throw CalibError(errc::invalid_argument, "class " + std::to_string(c) + " outside [0, " +
                                                   std::to_string(preds.k) + ")");
    }
    if (new_index[static_cast<std::size_t>(c)] != -1) {
      throw CalibError(errc::invalid_argument, "class " + std::to_string(c) + " repeated in keep set");
    }
    new_index[static_cast<std::size_t>(c)] = static_cast<std::int32_t>(j);
  }

  PredictionSet logits = logits_of(preds);
  PredictionSet out;
  out.n = preds.n;
  out.k = keep.size();
  out.kind = ScoreKind::logits;
  out.model_name = preds.model_name;
  out.dataset_name = preds.dataset_name;
  out.example_ids = preds.example_ids;
  out.scores.resize(out.n * out.k);
  out.labels.resize(out.n);
  for (std::size_t i = 0; i < preds.n; ++i) {
    std::int32_t mapped = new_index[static_cast<std::size_t>(preds.labels[i])];
    if (mapped == -1) {
      throw CalibError(errc::label_not_in_subset, "label " + std::to_string(preds.labels[i]) +
                                                      " at row " + std::to_string(i) +
                                                      " not in keep set");
    }
    out.labels[i] = mapped;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      out.scores[i * out.k + j] = logits.scores[i * preds.k + static_cast<std::size_t>(keep[j])];
    }
  }
  return out;
}

}  // namespace calib
