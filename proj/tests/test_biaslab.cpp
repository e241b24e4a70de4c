#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "calib/biaslab.hpp"
#include "calib/rng.hpp"

using namespace calib;

namespace {

BinBiasInputs manual_bin(std::size_t count, double alpha, double delta, double var_c) {
  BinBiasInputs in;
  in.count = count;
  in.alpha = alpha;
  in.delta = delta;
  in.delta_defined = true;
  in.var_c = var_c;
  return in;
}

GeneratorSpec study_gen(std::uint64_t seed) {
  GeneratorSpec gen;
  gen.law = ConfidenceLaw::uniform_law(0.5, 1.0);
  gen.k = 2;
  gen.seed = seed;
  return gen;
}

}  // namespace

TEST_CASE("per-bin squared bias, constant confidence") {
  // V[C] = 0, Cov = 0, V[A] = 1/3 with the n-1 divisor. Bias = (1/4)(1/3).
  std::vector<double> c{0.8, 0.8, 0.8, 0.8};
  std::vector<std::uint8_t> a{1, 0, 1, 0};
  CHECK(per_bin_sq_bias(c, a) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("outcome equals confidence leaves no bias") {
  std::vector<double> c{1.0, 0.0, 1.0, 1.0, 0.0};
  std::vector<std::uint8_t> a{1, 0, 1, 1, 0};
  // V[A], V[C], Cov run over identical sequences, so the combination is exactly 0.
  CHECK(per_bin_sq_bias(c, a) == 0.0);
}

TEST_CASE("degenerate bins") {
  std::vector<double> c{0.9};
  std::vector<std::uint8_t> a{1};
  try {
    per_bin_sq_bias(c, a);
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::bin_too_small);
  }
  std::vector<double> c2{0.9, 0.8};
  std::vector<std::uint8_t> a2{1};
  CHECK_THROWS_AS(per_bin_sq_bias(c2, a2), CalibError);
}

TEST_CASE("all-correct constant bin has zero inputs") {
  // 0.75 is dyadic, so the three-term mean is exact and the deviations are
  // exactly zero.
  std::vector<double> c{0.75, 0.75, 0.75};
  std::vector<std::uint8_t> a{1, 1, 1};
  BinBiasInputs in = bin_bias_inputs(c, a);
  CHECK(in.alpha == 1.0);
  CHECK(in.var_a == 0.0);
  CHECK(in.var_c == 0.0);
  CHECK_FALSE(in.delta_defined);
  CHECK(per_bin_sq_bias(c, a) == 0.0);
}

TEST_CASE("moment inputs are invariant to confidence translation") {
  Rng rng(99);
  std::vector<double> c(50), shifted(50);
  std::vector<std::uint8_t> a(50);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = rng.next_double();
    shifted[i] = c[i] + 0.25;
    a[i] = rng.next_double() < 0.6 ? 1 : 0;
  }
  BinBiasInputs base = bin_bias_inputs(c, a);
  BinBiasInputs moved = bin_bias_inputs(shifted, a);
  CHECK(moved.var_c == doctest::Approx(base.var_c).epsilon(1e-12));
  CHECK(moved.var_a == base.var_a);
  CHECK(moved.cov_ca == doctest::Approx(base.cov_ca).epsilon(1e-12));
  CHECK(moved.delta == doctest::Approx(base.delta).epsilon(1e-12));
  CHECK(moved.alpha == base.alpha);
}

TEST_CASE("covariance collapses to the alpha-delta form") {
  Rng rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 20 + static_cast<std::size_t>(rng.next_below(200));
    std::vector<double> c(n);
    std::vector<std::uint8_t> a(n);
    bool mixed = false;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = rng.uniform(0.5, 1.0);
      a[i] = rng.next_double() < c[i] ? 1 : 0;
    }
    for (std::size_t i = 1; i < n; ++i) mixed = mixed || (a[i] != a[0]);
    if (!mixed) continue;
    BinBiasInputs in = bin_bias_inputs(c, a);
    REQUIRE(in.delta_defined);
    const double nd = static_cast<double>(n);
    const double expect = in.alpha * (1.0 - in.alpha) * in.delta * nd / (nd - 1.0);
    CHECK(in.cov_ca == doctest::Approx(expect).epsilon(1e-9));

    // Same algebra folds the whole combination into alpha, delta and V[C].
    const double folded =
        (nd / (nd - 1.0) * in.alpha * (1.0 - in.alpha) * (1.0 - 2.0 * in.delta) + in.var_c) / nd;
    CHECK(per_bin_sq_bias(c, a) == doctest::Approx(folded).epsilon(1e-9));
  }
}

TEST_CASE("single-bin closed form") {
  // alpha = 1/2, delta = 0, V[C] = 0 at n = 10 gives 0.25 / 10.
  std::vector<BinBiasInputs> bins{manual_bin(10, 0.5, 0.0, 0.0)};
  CHECK(lemma_bias(bins, 10) == 0.025);
}

TEST_CASE("pure bins contribute only their confidence variance") {
  std::vector<BinBiasInputs> bins{manual_bin(50, 1.0, 0.0, 0.0), manual_bin(50, 0.0, 0.0, 0.0)};
  bins[0].delta_defined = false;
  bins[1].delta_defined = false;
  CHECK(lemma_bias(bins, 100) == 0.0);
  bins[0].var_c = 0.002;
  CHECK(lemma_bias(bins, 100) == doctest::Approx(2e-5).epsilon(1e-12));
}

TEST_CASE("bias halves exactly when the sample doubles") {
  std::vector<BinBiasInputs> bins{manual_bin(100, 0.7, 0.05, 0.001),
                                  manual_bin(100, 0.9, 0.02, 0.003)};
  CHECK(lemma_bias(bins, 1000) == 2.0 * lemma_bias(bins, 2000));
}

TEST_CASE("mixed bin without a defined gap is rejected") {
  std::vector<BinBiasInputs> bins{manual_bin(10, 0.3, 0.0, 0.0)};
  bins[0].delta_defined = false;
  try {
    lemma_bias(bins, 10);
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::undefined_delta);
  }
  // Bins too small for moments are skipped rather than rejected.
  bins[0].count = 1;
  CHECK(lemma_bias(bins, 10) == 0.0);
}

TEST_CASE("closed form falls with accuracy above one half and with delta") {
  double prev = 1.0;
  for (double alpha : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    std::vector<BinBiasInputs> bins{manual_bin(100, alpha, 0.0, 0.0)};
    const double b = lemma_bias(bins, 100);
    CHECK(b < prev);
    prev = b;
  }
  prev = 1.0;
  for (double delta : {0.0, 0.15, 0.3, 0.45}) {
    std::vector<BinBiasInputs> bins{manual_bin(100, 0.7, delta, 0.0)};
    const double b = lemma_bias(bins, 100);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("monte carlo mean matches the closed form") {
  EceConfig cfg;
  cfg.binning = {BinningScheme::equal_mass, 10};
  BiasReport report = mc_bias(study_gen(5), cfg, 1000, 600, 1234);
  CHECK(report.mc_mean > 5.0 * report.mc_stderr);
  CHECK(report.lemma_total > 0.0);
  // 1e-4 covers estimation error in the closed form's own reference draw.
  CHECK(std::fabs(report.mc_mean - report.lemma_total) < 3.0 * report.mc_stderr + 1e-4);
  CHECK(std::fabs(report.eq5_total - report.lemma_total) < 1e-3 * report.lemma_total);
  CHECK(report.n_ref == 100 * report.n);
  CHECK(report.reference_bins.size() == 10);
}

TEST_CASE("bias scales inversely with the sample size") {
  EceConfig cfg;
  cfg.binning = {BinningScheme::equal_mass, 10};
  BiasReport small = mc_bias(study_gen(5), cfg, 1000, 400, 42);
  BiasReport large = mc_bias(study_gen(5), cfg, 4000, 400, 43);
  const double ratio = large.mc_mean / small.mc_mean;
  CHECK(ratio > 0.2);
  CHECK(ratio < 0.3);
}

TEST_CASE("a perfectly confident generator has zero bias exactly") {
  GeneratorSpec gen;
  gen.law = ConfidenceLaw::point_law(1.0);
  gen.k = 2;
  gen.seed = 9;
  EceConfig cfg;
  cfg.binning = {BinningScheme::equal_mass, 5};
  BiasReport report = mc_bias(gen, cfg, 200, 100, 7);
  CHECK(report.mc_mean == 0.0);
  CHECK(report.mc_stderr == 0.0);
  CHECK(report.lemma_total == 0.0);
}

TEST_CASE("monte carlo preconditions") {
  EceConfig cfg;
  GeneratorSpec gen = study_gen(1);
  gen.mode = CalibrationMode::distorted;
  gen.true_temperature = 2.0;
  CHECK_THROWS_AS(mc_bias(gen, cfg, 100, 100, 1), CalibError);
  CHECK_THROWS_AS(mc_bias(study_gen(1), cfg, 100, 50, 1), CalibError);
  CHECK_THROWS_AS(mc_bias(study_gen(1), cfg, 0, 100, 1), CalibError);
}

TEST_CASE("finer binning inflates the measured error") {
  BinCountStudy study = bias_vs_bins_study(study_gen(2), 2000, {10, 100}, 300, 77);
  REQUIRE(study.rows.size() == 2);
  const auto& coarse = study.rows[0];
  const auto& fine = study.rows[1];
  CHECK(coarse.num_bins == 10);
  CHECK(fine.mean > coarse.mean);
  CHECK(fine.mean - coarse.mean > 3.0 * (fine.std_error + coarse.std_error));
}

TEST_CASE("one bin measures almost nothing on calibrated data") {
  BinCountStudy study = bias_vs_bins_study(study_gen(3), 1000, {1}, 200, 5);
  CHECK(study.rows[0].mean < 2.0 / std::sqrt(1000.0));
}

TEST_CASE("study preconditions") {
  CHECK_THROWS_AS(bias_vs_bins_study(study_gen(1), 2000, {3000}, 10, 1), CalibError);
  try {
    bias_vs_bins_study(study_gen(1), 2000, {3000}, 10, 1);
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::too_many_bins);
  }
  CHECK_THROWS_AS(bias_vs_bins_study(study_gen(1), 0, {10}, 10, 1), CalibError);
  CHECK_THROWS_AS(bias_vs_bins_study(study_gen(1), 2000, {}, 10, 1), CalibError);
  CHECK_THROWS_AS(bias_vs_bins_study(study_gen(1), 2000, {10}, 1, 1), CalibError);
  GeneratorSpec gen = study_gen(1);
  gen.mode = CalibrationMode::distorted;
  CHECK_THROWS_AS(bias_vs_bins_study(gen, 2000, {10}, 10, 1), CalibError);
}
