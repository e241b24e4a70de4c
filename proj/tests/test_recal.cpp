#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "calib/metrics.hpp"
#include "calib/recal.hpp"
#include "calib/rng.hpp"
#include "calib/synth.hpp"

using namespace calib;

namespace {

PredictionSet logits(std::vector<double> scores, std::size_t n, std::size_t k,
                     std::vector<std::int32_t> labels) {
  return validate(std::move(scores), n, k, ScoreKind::logits, std::move(labels));
}

PredictionSet calibrated(std::size_t n, std::uint64_t seed, std::size_t k = 5) {
  GeneratorSpec spec;
  spec.law = ConfidenceLaw::uniform_law(0.5, 1.0);
  spec.k = k;
  spec.seed = seed;
  return gen_calibrated(spec, n);
}

std::vector<std::size_t> argmax_set(std::span<const double> row) {
  double best = row[0];
  for (double v : row) best = std::max(best, v);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] == best) out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  PredictionSet p = probabilities_of(logits({0.0, 0.0}, 1, 2, {0}));
  CHECK(p.scores[0] == 0.5);
  CHECK(p.scores[1] == 0.5);
  CHECK(p.kind == ScoreKind::probabilities);
}

TEST_CASE("softmax of [2, 1]") {
  PredictionSet p = probabilities_of(logits({2.0, 1.0}, 1, 2, {0}));
  CHECK(p.scores[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(p.scores[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("probabilities pass through probabilities_of unchanged") {
  PredictionSet p = validate({0.7, 0.3}, 1, 2, ScoreKind::probabilities, {0});
  PredictionSet q = probabilities_of(p);
  CHECK(q.scores == p.scores);
}

TEST_CASE("logits_of takes clamped logs") {
  PredictionSet half = logits_of(validate({0.5, 0.5}, 1, 2, ScoreKind::probabilities, {0}));
  CHECK(half.kind == ScoreKind::logits);
  CHECK(half.scores[0] == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  PredictionSet back = probabilities_of(half);
  CHECK(back.scores[0] == doctest::Approx(0.5).epsilon(1e-15));

  PredictionSet hard = logits_of(validate({1.0, 0.0}, 1, 2, ScoreKind::probabilities, {0}));
  CHECK(hard.scores[0] == 0.0);
  CHECK(hard.scores[1] == doctest::Approx(std::log(1e-12)).epsilon(1e-15));
}

TEST_CASE("probability to logit round trip away from zero") {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> row(4);
    double sum = 0.0;
    for (double& v : row) {
      v = 0.05 + rng.next_double();
      sum += v;
    }
    for (double& v : row) v /= sum;
    PredictionSet p = validate(row, 1, 4, ScoreKind::probabilities, {0});
    PredictionSet q = probabilities_of(logits_of(p));
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(q.scores[c] == doctest::Approx(p.scores[c]).epsilon(1e-9));
    }
  }
}

TEST_CASE("temperature one is the identity on probabilities") {
  PredictionSet p = calibrated(500, 3);
  PredictionSet probs = probabilities_of(p);
  PredictionSet scaled = apply_temperature(p, 1.0);
  CHECK(scaled.scores == probs.scores);
}

TEST_CASE("large temperature flattens towards uniform") {
  PredictionSet p = logits({4.0, 1.0, -2.0, 0.5}, 1, 4, {0});
  PredictionSet scaled = apply_temperature(p, 1e6);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(scaled.scores[c] == doctest::Approx(0.25).epsilon(1e-5));
  }
}

TEST_CASE("temperature never moves the argmax") {
  Rng rng(9);
  std::vector<double> z(50 * 4);
  std::vector<std::int32_t> labels(50, 0);
  for (double& v : z) v = rng.uniform(-5.0, 5.0);
  PredictionSet p = logits(z, 50, 4, labels);
  PredictionSet base = probabilities_of(p);
  for (double t : {0.1, 0.5, 2.0, 10.0}) {
    PredictionSet scaled = apply_temperature(p, t);
    for (std::size_t i = 0; i < p.n; ++i) {
      CHECK(argmax_set(base.row(i)) == argmax_set(scaled.row(i)));
    }
  }
}

TEST_CASE("non-positive temperatures are rejected") {
  PredictionSet p = logits({1.0, 0.0}, 1, 2, {0});
  for (double t : {0.0, -1.0}) {
    try {
      apply_temperature(p, t);
      FAIL("expected throw");
    } catch (const CalibError& e) {
      CHECK(e.code() == errc::non_positive_temperature);
    }
  }
}

TEST_CASE("temperature recovery on a calibrated set") {
  PredictionSet p = calibrated(100000, 17);
  Temperature t = fit_temperature(p);
  CHECK(t.value > 0.98);
  CHECK(t.value < 1.02);
  CHECK_FALSE(t.hit_boundary);

  PredictionSet doubled = p;
  for (double& v : doubled.scores) v *= 2.0;
  Temperature t2 = fit_temperature(doubled);
  CHECK(t2.value > 1.96);
  CHECK(t2.value < 2.04);
}

TEST_CASE("a single correct sample drives the fit to the lower bound") {
  // Modest logit gap: the NLL keeps a representable slope all the way down,
  // so the search runs into the clamp instead of stalling on a flat-zero
  // stretch.
  PredictionSet p = logits({1.0, 0.0}, 1, 2, {0});
  Temperature t = fit_temperature(p);
  CHECK(t.value == kTemperatureMin);
  CHECK(t.hit_boundary);
}

TEST_CASE("fitting an already fitted set lands near one") {
  PredictionSet p = gen_distorted(calibrated(100000, 23), 1.7);
  Temperature t = fit_temperature(p);
  PredictionSet fixed = apply_temperature(p, t.value);
  Temperature again = fit_temperature(fixed);
  CHECK(std::fabs(again.value - 1.0) < 1e-2);
}

TEST_CASE("fitted temperature does not increase the fit-set likelihood objective") {
  PredictionSet p = gen_distorted(calibrated(20000, 29), 0.6);
  Temperature t = fit_temperature(p);
  CHECK(t.final_nll <= mean_nll_at_temperature(p, 1.0));
  CHECK(t.final_nll == doctest::Approx(mean_nll_at_temperature(p, t.value)).epsilon(1e-12));
}

TEST_CASE("the nll derivative vanishes at an interior fit") {
  PredictionSet p = gen_distorted(calibrated(20000, 31), 1.4);
  Temperature t = fit_temperature(p);
  REQUIRE_FALSE(t.hit_boundary);
  const double h = 1e-4;
  const double up = mean_nll_at_temperature(p, std::exp(std::log(t.value) + h));
  const double down = mean_nll_at_temperature(p, std::exp(std::log(t.value) - h));
  CHECK(std::fabs((up - down) / (2.0 * h)) < 1e-3);
}

TEST_CASE("confidence factor flags over- and underconfidence") {
  PredictionSet p = calibrated(100000, 41);
  CHECK(std::fabs(confidence_factor(p).value - 1.0) <= 0.02);

  PredictionSet over = p;
  for (double& v : over.scores) v *= 2.0;
  const double t_over = confidence_factor(over).value;
  CHECK(t_over > 1.0);
  CHECK(std::fabs(t_over - 2.0) <= 0.04);

  PredictionSet under = p;
  for (double& v : under.scores) v *= 0.5;
  const double t_under = confidence_factor(under).value;
  CHECK(t_under < 1.0);
  CHECK(std::fabs(t_under - 0.5) <= 0.01);
}

TEST_CASE("holdout split sizes, determinism, and partition") {
  PredictionSet p = calibrated(10, 47, 3);
  p.example_ids.resize(10);
  for (std::size_t i = 0; i < 10; ++i) p.example_ids[i] = "ex" + std::to_string(i);

  auto [fit1, eval1] = split_holdout(p, 0.2, 99);
  CHECK(fit1.n == 2);
  CHECK(eval1.n == 8);

  auto [fit2, eval2] = split_holdout(p, 0.2, 99);
  CHECK(fit1.example_ids == fit2.example_ids);
  CHECK(eval1.example_ids == eval2.example_ids);

  std::set<std::string> seen(fit1.example_ids.begin(), fit1.example_ids.end());
  for (const std::string& id : eval1.example_ids) {
    CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("degenerate splits are rejected") {
  PredictionSet p = calibrated(3, 53, 2);
  // floor(f * 3) of 0 or 3 leaves one side empty.
  for (double f : {0.1, std::nextafter(1.0, 0.0)}) {
    try {
      split_holdout(p, f, 1);
      FAIL("expected throw");
    } catch (const CalibError& e) {
      CHECK(e.code() == errc::degenerate_split);
    }
  }
  CHECK_THROWS_AS(split_holdout(p, 0.0, 1), CalibError);
  CHECK_THROWS_AS(split_holdout(p, 1.0, 1), CalibError);
}

TEST_CASE("split fraction snaps exact products") {
  PredictionSet p = calibrated(10, 59, 2);
  // 0.3 * 10 is 2.9999... in floating point; the split must still be (3, 7).
  auto [fit, eval] = split_holdout(p, 0.3, 5);
  CHECK(fit.n == 3);
  CHECK(eval.n == 7);
}

TEST_CASE("class subsetting renormalizes over the kept classes") {
  PredictionSet p = logits({2.0, 1.0, 0.0, 0.0}, 1, 4, {0});
  PredictionSet sub = subset_classes(p, {0, 1});
  CHECK(sub.k == 2);
  CHECK(sub.labels[0] == 0);
  PredictionSet probs = probabilities_of(sub);
  CHECK(probs.scores[0] == doctest::Approx(0.7310585786300049).epsilon(1e-9));
  CHECK(probs.scores[1] == doctest::Approx(0.2689414213699951).epsilon(1e-9));
}

TEST_CASE("keeping every class is the identity") {
  PredictionSet p = calibrated(50, 61, 4);
  PredictionSet sub = subset_classes(p, {0, 1, 2, 3});
  CHECK(probabilities_of(sub).scores == probabilities_of(p).scores);
  CHECK(sub.labels == p.labels);
}

TEST_CASE("subset errors") {
  PredictionSet p = logits({2.0, 1.0, 0.0, 0.0}, 1, 4, {3});
  try {
    subset_classes(p, {0, 1});
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::label_not_in_subset);
  }
  CHECK_THROWS_AS(subset_classes(p, {}), CalibError);
  CHECK_THROWS_AS(subset_classes(p, {0, 0}), CalibError);
  CHECK_THROWS_AS(subset_classes(p, {0, 9}), CalibError);
}

TEST_CASE("subset probabilities stay on the simplex") {
  PredictionSet p = calibrated(200, 67, 6);
  PredictionSet probs = probabilities_of(subset_classes(p, {5, 1, 3, 0, 2, 4}));
  for (std::size_t i = 0; i < probs.n; ++i) {
    double sum = 0.0;
    for (double v : probs.row(i)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("classification error is bitwise invariant under scaling") {
  PredictionSet p = calibrated(5000, 71, 4);
  const double base = classification_error(p);
  for (double t : {0.25, 1.0, 3.0}) {
    CHECK(classification_error(apply_temperature(p, t)) == base);
  }
}
