#include "calib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "calib/parallel.hpp"
#include "calib/recal.hpp"

namespace calib {

namespace {

// The arithmetic order here is pinned, because tests hold the parallel path to
// bit-exact agreement with a serial reference: per-bin sums accumulate in
// ascending pair index, bin means are sum / count, the weighted terms combine
// serially in ascending bin index. Changing any of that changes results in the
// last ulp.
double binned_gap(const std::vector<double>& values, const std::vector<std::uint8_t>& indicator,
                  const BinningSpec& spec, EceNorm norm) {
  const std::size_t n = values.size();
  const std::size_t m = spec.num_bins;
  if (m == 0) throw CalibError(errc::invalid_argument, "num_bins must be at least 1");

  std::vector<std::uint32_t> bin_of(n);
  if (spec.scheme == BinningScheme::equal_width) {
    parallel_for(n, [&](std::size_t t) {
      auto b = static_cast<std::size_t>(std::floor(values[t] * static_cast<double>(m)));
      if (b >= m) b = m - 1;
      bin_of[t] = static_cast<std::uint32_t>(b);
    });
  } else {
    if (m > n) {
      throw CalibError(errc::too_many_bins, "equal_mass needs num_bins <= " + std::to_string(n) +
                                                ", got " + std::to_string(m));
    }
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t t = 0; t < n; ++t) order[t] = {values[t], t};
    std::sort(order.begin(), order.end());
    const std::size_t base = n / m;
    const std::size_t extra = n % m;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      for (std::size_t j = 0; j < size; ++j) {
        bin_of[order[pos + j].second] = static_cast<std::uint32_t>(b);
      }
      pos += size;
    }
  }

  // Bucket members in ascending pair index via a stable counting sort.
  std::vector<std::size_t> count(m, 0);
  for (std::size_t t = 0; t < n; ++t) count[bin_of[t]] += 1;
  std::vector<std::size_t> offset(m + 1, 0);
  for (std::size_t b = 0; b < m; ++b) offset[b + 1] = offset[b] + count[b];
  std::vector<std::uint32_t> member(n);
  {
    std::vector<std::size_t> cursor(offset.begin(), offset.end() - 1);
    for (std::size_t t = 0; t < n; ++t) member[cursor[bin_of[t]]++] = static_cast<std::uint32_t>(t);
  }

  std::vector<double> term(m, 0.0);
  parallel_for(m, [&](std::size_t b) {
    if (count[b] == 0) return;  // empty bins contribute exactly 0
    double sum_v = 0.0, sum_a = 0.0;
    for (std::size_t j = offset[b]; j < offset[b + 1]; ++j) {
      const std::size_t t = member[j];
      sum_v += values[t];
      sum_a += indicator[t] ? 1.0 : 0.0;
    }
    const double cnt = static_cast<double>(count[b]);
    const double gap = sum_a / cnt - sum_v / cnt;
    const double w = cnt / static_cast<double>(n);
    term[b] = (norm == EceNorm::l1) ? w * std::fabs(gap) : w * gap * gap;
  });

  double total = 0.0;
  for (std::size_t b = 0; b < m; ++b) total += term[b];
  return (norm == EceNorm::rms) ? std::sqrt(total) : total;
}

}  // namespace

double ece(const PredictionSet& preds, const EceConfig& cfg) {
  if (preds.n == 0) throw CalibError(errc::empty_input, "prediction set has no examples");
  switch (cfg.aggregation) {
    case EceAggregation::top_label: {
      TopLabelView view = top_label_view(preds);
      return binned_gap(view.confidence, view.correct, cfg.binning, cfg.norm);
    }
    case EceAggregation::class_wise: {
      PredictionSet probs = probabilities_of(preds);
      const std::size_t k = probs.k;
      BinningSpec per_class{cfg.binning.scheme, cfg.class_wise_bins};
      std::vector<double> values(probs.n);
      std::vector<std::uint8_t> indicator(probs.n);
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < probs.n; ++i) {
          values[i] = probs.scores[i * k + c];
          indicator[i] = (static_cast<std::size_t>(probs.labels[i]) == c) ? 1 : 0;
        }
        total += binned_gap(values, indicator, per_class, cfg.norm);
      }
      return total / static_cast<double>(k);
    }
    case EceAggregation::all_label: {
      PredictionSet probs = probabilities_of(preds);
      const std::size_t k = probs.k;
      std::vector<double> values(probs.n * k);
      std::vector<std::uint8_t> indicator(probs.n * k);
      for (std::size_t i = 0; i < probs.n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
          values[i * k + c] = probs.scores[i * k + c];
          indicator[i * k + c] = (static_cast<std::size_t>(probs.labels[i]) == c) ? 1 : 0;
        }
      }
      return binned_gap(values, indicator, cfg.binning, cfg.norm);
    }
  }
  throw CalibError(errc::invalid_argument, "unknown aggregation");
}

double nll(const PredictionSet& preds) {
  PredictionSet probs = probabilities_of(preds);
  double total = blocked_sum(probs.n, [&](std::size_t i) {
    double p = probs.scores[i * probs.k + static_cast<std::size_t>(probs.labels[i])];
    return -std::log(std::max(p, kLogClamp));
  });
  return total / static_cast<double>(probs.n);
}

double brier(const PredictionSet& preds) {
  PredictionSet probs = probabilities_of(preds);
  const std::size_t k = probs.k;
  double total = blocked_sum(probs.n, [&](std::size_t i) {
    const double* p = probs.scores.data() + i * k;
    const auto label = static_cast<std::size_t>(probs.labels[i]);
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double d = p[c] - (c == label ? 1.0 : 0.0);
      s += d * d;
    }
    return s;
  });
  return total / static_cast<double>(probs.n);
}

double classification_error(const PredictionSet& preds) {
  TopLabelView view = top_label_view(preds);
  double correct = blocked_sum(view.size(), [&](std::size_t i) { return view.correct[i] ? 1.0 : 0.0; });
  return 1.0 - correct / static_cast<double>(view.size());
}

ReliabilityData reliability_data(const PredictionSet& preds, const BinningSpec& spec,
                                 std::size_t hist_bins) {
  if (hist_bins == 0) throw CalibError(errc::invalid_argument, "hist_bins must be at least 1");
  TopLabelView view = top_label_view(preds);
  BinAssignment assignment = bin_assign(view, spec);

  ReliabilityData out;
  out.bins = std::move(assignment.stats);
  out.n = view.size();
  out.histogram.assign(hist_bins, 0);
  for (std::size_t i = 0; i < view.size(); ++i) {
    auto cell = static_cast<std::size_t>(std::floor(view.confidence[i] * static_cast<double>(hist_bins)));
    if (cell >= hist_bins) cell = hist_bins - 1;
    out.histogram[cell] += 1;
  }
  return out;
}

}  // namespace calib
