#include "calib/core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "calib/parallel.hpp"
#include "calib/recal.hpp"

namespace calib {

PredictionSet validate(std::vector<double> scores, std::size_t n, std::size_t k, ScoreKind kind,
                       std::vector<std::int32_t> labels, std::vector<std::string> example_ids,
                       std::string model_name, std::string dataset_name) {
  if (n == 0) throw CalibError(errc::empty_input, "prediction set has no examples");
  if (k < 2) throw CalibError(errc::invalid_shape, "need at least 2 classes, got " + std::to_string(k));
  if (scores.size() != n * k) {
    throw CalibError(errc::invalid_shape, "expected " + std::to_string(n * k) + " scores, got " +
                                              std::to_string(scores.size()));
  }
  if (labels.size() != n) {
    throw CalibError(errc::invalid_shape, "expected " + std::to_string(n) + " labels, got " +
                                              std::to_string(labels.size()));
  }
  if (!example_ids.empty() && example_ids.size() != n) {
    throw CalibError(errc::invalid_shape, "expected " + std::to_string(n) + " example ids, got " +
                                              std::to_string(example_ids.size()));
  }

  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw CalibError(errc::non_finite_score,
                       "non-finite score at row " + std::to_string(i / k) + ", class " +
                           std::to_string(i % k));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw CalibError(errc::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                     std::to_string(i) + " outside [0, " +
                                                     std::to_string(k) + ")");
    }
  }

  if (kind == ScoreKind::probabilities) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        double p = scores[i * k + c];
        if (p < 0.0 || p > 1.0 + kProbSumTolerance) {
          throw CalibError(errc::not_normalized,
                           "probability " + std::to_string(p) + " at row " + std::to_string(i) +
                               " outside [0, 1]");
        }
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kProbSumTolerance) {
        throw CalibError(errc::not_normalized, "row " + std::to_string(i) + " sums to " +
                                                   std::to_string(sum) + ", more than " +
                                                   std::to_string(kProbSumTolerance) + " from 1");
      }
      if (sum != 1.0) {
        for (std::size_t c = 0; c < k; ++c) scores[i * k + c] /= sum;
      }
    }
  }

  PredictionSet out;
  out.n = n;
  out.k = k;
  out.kind = kind;
  out.scores = std::move(scores);
  out.labels = std::move(labels);
  out.example_ids = std::move(example_ids);
  out.model_name = std::move(model_name);
  out.dataset_name = std::move(dataset_name);
  return out;
}

TopLabelView top_label_view(const PredictionSet& preds) {
  PredictionSet probs = probabilities_of(preds);
  TopLabelView view;
  view.confidence.resize(probs.n);
  view.correct.resize(probs.n);
  parallel_for(probs.n, [&](std::size_t i) {
    auto row = probs.row(i);
    double best = row[0];
    for (std::size_t c = 1; c < probs.k; ++c) {
      if (row[c] > best) best = row[c];
    }
    view.confidence[i] = best;
    view.correct[i] = (row[static_cast<std::size_t>(probs.labels[i])] == best) ? 1 : 0;
  });
  return view;
}

BinAssignment bin_assign(const TopLabelView& view, const BinningSpec& spec) {
  const std::size_t n = view.size();
  const std::size_t m = spec.num_bins;
  if (n == 0) throw CalibError(errc::empty_input, "cannot bin an empty view");
  if (m == 0) throw CalibError(errc::invalid_argument, "num_bins must be at least 1");

  BinAssignment out;
  out.bin_of.resize(n);
  out.stats.bins.resize(m);

  if (spec.scheme == BinningScheme::equal_width) {
    for (std::size_t i = 0; i < n; ++i) {
      double c = view.confidence[i];
      auto b = static_cast<std::size_t>(std::floor(c * static_cast<double>(m)));
      if (b >= m) b = m - 1;  // right-closed top bin catches c == 1
      out.bin_of[i] = static_cast<std::uint32_t>(b);
    }
    for (std::size_t b = 0; b < m; ++b) {
      out.stats.bins[b].lo = static_cast<double>(b) / static_cast<double>(m);
      out.stats.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(m);
    }
  } else {
    if (m > n) {
      throw CalibError(errc::too_many_bins, "equal_mass needs num_bins <= n, got " +
                                                std::to_string(m) + " bins for " + std::to_string(n) +
                                                " examples");
    }
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = {view.confidence[i], i};
    std::sort(order.begin(), order.end());

    const std::size_t base = n / m;
    const std::size_t extra = n % m;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      out.stats.bins[b].lo = order[pos].first;
      out.stats.bins[b].hi = order[pos + size - 1].first;
      for (std::size_t j = 0; j < size; ++j) {
        out.bin_of[order[pos + j].second] = static_cast<std::uint32_t>(b);
      }
      pos += size;
    }
  }

  // Accumulate per-bin sums in ascending example order; means are sum / count.
  std::vector<double> sum_conf(m, 0.0), sum_acc(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t b = out.bin_of[i];
    sum_conf[b] += view.confidence[i];
    sum_acc[b] += view.correct[i] ? 1.0 : 0.0;
    count[b] += 1;
  }
  for (std::size_t b = 0; b < m; ++b) {
    auto& bin = out.stats.bins[b];
    bin.count = count[b];
    if (count[b] > 0) {
      bin.mean_confidence = sum_conf[b] / static_cast<double>(count[b]);
      bin.mean_accuracy = sum_acc[b] / static_cast<double>(count[b]);
    }
  }
  return out;
}

}  // namespace calib
