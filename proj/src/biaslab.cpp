#include "calib/biaslab.hpp"

#include <cmath>

#include "calib/parallel.hpp"
#include "calib/rng.hpp"

namespace calib {

BinBiasInputs bin_bias_inputs(std::span<const double> c, std::span<const std::uint8_t> a) {
  const std::size_t n = c.size();
  if (a.size() != n) throw CalibError(errc::invalid_shape, "C and A sample lengths differ");
  if (n < 2) {
    throw CalibError(errc::bin_too_small,
                     "need at least 2 samples for unbiased moments, got " + std::to_string(n));
  }

  double sum_c = 0.0, sum_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_c += c[i];
    sum_a += a[i] ? 1.0 : 0.0;
  }
  const double nd = static_cast<double>(n);
  const double mean_c = sum_c / nd;
  const double alpha = sum_a / nd;

  double ss_c = 0.0, ss_a = 0.0, ss_ca = 0.0;
  double sum_c1 = 0.0, sum_c0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dc = c[i] - mean_c;
    const double da = (a[i] ? 1.0 : 0.0) - alpha;
    ss_c += dc * dc;
    ss_a += da * da;
    ss_ca += dc * da;
    if (a[i]) {
      sum_c1 += c[i];
      n1 += 1;
    } else {
      sum_c0 += c[i];
    }
  }

  BinBiasInputs out;
  out.count = n;
  out.alpha = alpha;
  out.var_c = ss_c / (nd - 1.0);
  out.var_a = ss_a / (nd - 1.0);
  out.cov_ca = ss_ca / (nd - 1.0);
  if (n1 > 0 && n1 < n) {
    out.delta = sum_c1 / static_cast<double>(n1) - sum_c0 / static_cast<double>(n - n1);
    out.delta_defined = true;
  }
  return out;
}

double per_bin_sq_bias(std::span<const double> c, std::span<const std::uint8_t> a) {
  BinBiasInputs in = bin_bias_inputs(c, a);
  return (in.var_a + in.var_c - 2.0 * in.cov_ca) / static_cast<double>(in.count);
}

double lemma_bias(const std::vector<BinBiasInputs>& bins, std::size_t n) {
  if (n == 0) throw CalibError(errc::invalid_argument, "total count must be positive");
  double total = 0.0;
  for (const BinBiasInputs& bin : bins) {
    if (bin.count < 2) continue;
    double mixed = 0.0;
    if (bin.alpha != 0.0 && bin.alpha != 1.0) {
      if (!bin.delta_defined) {
        throw CalibError(errc::undefined_delta,
                         "bin with mixed outcomes but no defined delta (alpha = " +
                             std::to_string(bin.alpha) + ")");
      }
      mixed = bin.alpha * (1.0 - bin.alpha) * (1.0 - 2.0 * bin.delta);
    }
    total += mixed + bin.var_c;
  }
  return total / static_cast<double>(n);
}

BiasReport mc_bias(const GeneratorSpec& gen, const EceConfig& cfg, std::size_t n, std::size_t trials,
                   std::uint64_t seed) {
  if (gen.mode != CalibrationMode::exact) {
    throw CalibError(errc::invalid_argument,
                     "bias study needs an exactly calibrated generator (true bucketed value 0)");
  }
  if (n == 0) throw CalibError(errc::empty_input, "per-trial sample size must be positive");
  if (trials < 100) {
    throw CalibError(errc::invalid_argument,
                     "need at least 100 trials, got " + std::to_string(trials));
  }

  EceConfig sq_cfg = cfg;
  sq_cfg.norm = EceNorm::l2;

  std::vector<double> stat(trials);
  parallel_for(trials, [&](std::size_t t) {
    GeneratorSpec trial_spec = gen;
    trial_spec.seed = derive_seed(seed, t);
    PredictionSet preds = gen_calibrated(trial_spec, n);
    stat[t] = ece(preds, sq_cfg);
  });

  // Reduce in trial order; results do not depend on scheduling.
  double mean = 0.0;
  for (std::size_t t = 0; t < trials; ++t) mean += stat[t];
  mean /= static_cast<double>(trials);
  double ss = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double d = stat[t] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(trials - 1));

  BiasReport report;
  report.mc_mean = mean;
  report.mc_stderr = sd / std::sqrt(static_cast<double>(trials));
  report.trials = trials;
  report.n = n;
  report.n_ref = 100 * n;
  report.generator = describe(gen);
  report.conventions =
      "unbiased sample moments (n-1 divisor); statistic is the l2 binned gap; reference draw "
      "rebinned with the study's binning spec";

  GeneratorSpec ref_spec = gen;
  ref_spec.seed = derive_seed(seed, 0xFFFFFFFFFFFFFFFFull);
  PredictionSet ref = gen_calibrated(ref_spec, report.n_ref);
  TopLabelView view = top_label_view(ref);
  BinAssignment assignment = bin_assign(view, cfg.binning);

  const std::size_t m = assignment.stats.bins.size();
  std::vector<std::vector<double>> conf(m);
  std::vector<std::vector<std::uint8_t>> outcome(m);
  for (std::size_t i = 0; i < view.size(); ++i) {
    const std::size_t b = assignment.bin_of[i];
    conf[b].push_back(view.confidence[i]);
    outcome[b].push_back(view.correct[i]);
  }
  report.reference_bins.reserve(m);
  double eq5_sum = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    if (conf[b].size() < 2) {
      BinBiasInputs empty;
      empty.count = conf[b].size();
      report.reference_bins.push_back(empty);
      continue;
    }
    BinBiasInputs in = bin_bias_inputs(conf[b], outcome[b]);
    report.reference_bins.push_back(in);
    eq5_sum += in.var_a + in.var_c - 2.0 * in.cov_ca;
  }
  report.lemma_total = lemma_bias(report.reference_bins, n);
  report.eq5_total = eq5_sum / static_cast<double>(n);
  return report;
}

BinCountStudy bias_vs_bins_study(const GeneratorSpec& gen, std::size_t n,
                                 const std::vector<std::size_t>& bin_counts, std::size_t trials,
                                 std::uint64_t seed) {
  if (gen.mode != CalibrationMode::exact) {
    throw CalibError(errc::invalid_argument,
                     "bias study needs an exactly calibrated generator (true value 0)");
  }
  if (n == 0) throw CalibError(errc::empty_input, "sample size must be positive");
  if (bin_counts.empty()) throw CalibError(errc::invalid_argument, "no bin counts given");
  if (trials < 2) throw CalibError(errc::invalid_argument, "need at least 2 trials");
  for (std::size_t m : bin_counts) {
    if (m > n) {
      throw CalibError(errc::too_many_bins, "bin count " + std::to_string(m) + " exceeds n = " +
                                                std::to_string(n));
    }
  }

  const std::size_t num_counts = bin_counts.size();
  std::vector<double> values(trials * num_counts);
  parallel_for(trials, [&](std::size_t t) {
    GeneratorSpec trial_spec = gen;
    trial_spec.seed = derive_seed(seed, t);
    // One draw per trial, evaluated at every bin count (paired design).
    PredictionSet preds = gen_calibrated(trial_spec, n);
    for (std::size_t j = 0; j < num_counts; ++j) {
      EceConfig cfg;
      cfg.binning = BinningSpec{BinningScheme::equal_mass, bin_counts[j]};
      cfg.norm = EceNorm::l1;
      cfg.aggregation = EceAggregation::top_label;
      values[t * num_counts + j] = ece(preds, cfg);
    }
  });

  BinCountStudy study;
  study.n = n;
  study.trials = trials;
  study.generator = describe(gen);
  study.rows.resize(num_counts);
  for (std::size_t j = 0; j < num_counts; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < trials; ++t) mean += values[t * num_counts + j];
    mean /= static_cast<double>(trials);
    double ss = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double d = values[t * num_counts + j] - mean;
      ss += d * d;
    }
    study.rows[j].num_bins = bin_counts[j];
    study.rows[j].mean = mean;
    study.rows[j].std_error =
        std::sqrt(ss / static_cast<double>(trials - 1)) / std::sqrt(static_cast<double>(trials));
  }
  return study;
}

}  // namespace calib
