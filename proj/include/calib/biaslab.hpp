#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "calib/core.hpp"
#include "calib/metrics.hpp"
#include "calib/synth.hpp"

namespace calib {

/// Per-bin ingredients of the estimator-bias formulas, from paired samples of
/// confidence C and outcome A. All moments use the unbiased (n-1 divisor)
/// convention.
struct BinBiasInputs {
  std::size_t count = 0;
  double alpha = 0.0;        // mean outcome
  double delta = 0.0;        // mean(C | A=1) - mean(C | A=0); 0 when undefined
  bool delta_defined = false;
  double var_a = 0.0;
  double var_c = 0.0;
  double cov_ca = 0.0;
};

BinBiasInputs bin_bias_inputs(std::span<const double> c, std::span<const std::uint8_t> a);

/// Bias of one bin's squared gap estimate:
/// (1/n_i) (V[A] + V[C] - 2 Cov[C, A]), plugged in with sample moments.
double per_bin_sq_bias(std::span<const double> c, std::span<const std::uint8_t> a);

/// Total bias of the squared-gap statistic for a sample of size n:
/// (1/n) sum_i [alpha_i (1 - alpha_i)(1 - 2 delta_i) + V[C | bin i]].
/// Bins whose alpha is 0 or 1 contribute only their V[C] term. Bins with
/// fewer than 2 members carry no usable moments and contribute 0.
double lemma_bias(const std::vector<BinBiasInputs>& bins, std::size_t n);

struct BiasReport {
  double mc_mean = 0.0;    // mean squared-gap statistic over trials
  double mc_stderr = 0.0;
  std::size_t trials = 0;
  std::size_t n = 0;       // per-trial sample size
  std::size_t n_ref = 0;   // reference draw size (100 * n)
  double lemma_total = 0.0;  // prediction from the reference draw
  double eq5_total = 0.0;    // same bias through the per-bin variance form
  std::vector<BinBiasInputs> reference_bins;
  std::string generator;
  std::string conventions;
};

/// Monte Carlo study of the squared-gap statistic on an exactly calibrated
/// generator (so the true bucketed value is 0 and the mean of the statistic
/// is its bias). Each trial draws n fresh examples from the stream
/// derive_seed(seed, trial); the reference draw for the analytic prediction
/// uses derive_seed(seed, 2^64 - 1). cfg.norm is forced to l2: the statistic
/// under study is the squared one.
BiasReport mc_bias(const GeneratorSpec& gen, const EceConfig& cfg, std::size_t n, std::size_t trials,
                   std::uint64_t seed);

struct BinCountStudyRow {
  std::size_t num_bins = 0;
  double mean = 0.0;       // mean plug-in l1 error over trials
  double std_error = 0.0;
};

struct BinCountStudy {
  std::vector<BinCountStudyRow> rows;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::string generator;
};

/// Mean plug-in top-label l1 error (equal-mass bins) per bin count, on a
/// calibrated generator where the true value is 0. Paired design: each trial
/// draws one sample and evaluates it at every bin count.
BinCountStudy bias_vs_bins_study(const GeneratorSpec& gen, std::size_t n,
                                 const std::vector<std::size_t>& bin_counts, std::size_t trials,
                                 std::uint64_t seed);

}  // namespace calib
