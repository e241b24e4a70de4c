#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "calib/core.hpp"
#include "calib/rng.hpp"

using namespace calib;

namespace {

PredictionSet probs(std::vector<double> scores, std::size_t n, std::size_t k,
                    std::vector<std::int32_t> labels) {
  return validate(std::move(scores), n, k, ScoreKind::probabilities, std::move(labels));
}

TopLabelView make_view(std::vector<double> confidence, std::vector<std::uint8_t> correct) {
  TopLabelView view;
  view.confidence = std::move(confidence);
  view.correct = std::move(correct);
  return view;
}

}  // namespace

TEST_CASE("validate accepts a well-formed probability row") {
  PredictionSet p = probs({0.7, 0.3}, 1, 2, {0});
  CHECK(p.n == 1);
  CHECK(p.k == 2);
  CHECK(p.scores[0] == 0.7);
}

TEST_CASE("validate rejects rows off the simplex") {
  CHECK_THROWS_WITH_AS(probs({0.5, 0.6}, 1, 2, {0}), doctest::Contains("not_normalized"),
                       CalibError);
}

TEST_CASE("validate rejects out-of-range labels") {
  try {
    probs({0.7, 0.3}, 1, 2, {5});
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::label_out_of_range);
  }
}

TEST_CASE("validate rejects empty input and bad shapes") {
  CHECK_THROWS_AS(probs({}, 0, 2, {}), CalibError);
  CHECK_THROWS_AS(probs({1.0}, 1, 1, {0}), CalibError);
  CHECK_THROWS_AS(probs({0.7, 0.3, 0.5}, 1, 2, {0}), CalibError);
}

TEST_CASE("validate rejects non-finite scores in either kind") {
  const double nan = std::nan("");
  try {
    probs({nan, 0.3}, 1, 2, {0});
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::non_finite_score);
  }
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate({inf, 0.0}, 1, 2, ScoreKind::logits, {0}), CalibError);
}

TEST_CASE("validate renormalizes rows within tolerance of the simplex") {
  PredictionSet p = probs({0.7 + 4e-7, 0.3}, 1, 2, {0});
  CHECK(p.scores[0] + p.scores[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.scores[0] > 0.69);
}

TEST_CASE("top_label_view reads max confidence and label membership") {
  // Rows sum to exactly 1, so renormalization leaves the bits alone.
  PredictionSet p = probs({0.5, 0.25, 0.25, 0.5, 0.25, 0.25}, 2, 3, {0, 2});
  TopLabelView view = top_label_view(p);
  CHECK(view.confidence[0] == 0.5);
  CHECK(view.correct[0] == 1);
  CHECK(view.confidence[1] == 0.5);
  CHECK(view.correct[1] == 0);
}

TEST_CASE("top_label_view counts a tied label as correct") {
  PredictionSet p = probs({0.5, 0.5}, 1, 2, {1});
  TopLabelView view = top_label_view(p);
  CHECK(view.confidence[0] == 0.5);
  CHECK(view.correct[0] == 1);
}

TEST_CASE("top_label correctness is argmax-invariant under monotone transforms") {
  Rng rng(31);
  const std::size_t n = 200, k = 4;
  std::vector<double> z(n * k);
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) z[i * k + c] = rng.uniform(-3.0, 3.0);
    labels[i] = static_cast<std::int32_t>(rng.next_below(k));
  }
  std::vector<double> scaled(z);
  for (double& v : scaled) v = 3.0 * v + 1.0;
  PredictionSet a = validate(z, n, k, ScoreKind::logits, labels);
  PredictionSet b = validate(scaled, n, k, ScoreKind::logits, labels);
  CHECK(top_label_view(a).correct == top_label_view(b).correct);
}

TEST_CASE("equal_width split of [0.2, 0.9] with two bins") {
  TopLabelView view = make_view({0.2, 0.9}, {1, 1});
  BinAssignment a = bin_assign(view, {BinningScheme::equal_width, 2});
  CHECK(a.bin_of[0] == 0);
  CHECK(a.bin_of[1] == 1);
}

TEST_CASE("equal_width top bin is right-closed") {
  TopLabelView view = make_view({1.0, 0.999}, {1, 0});
  BinAssignment a = bin_assign(view, {BinningScheme::equal_width, 10});
  CHECK(a.bin_of[0] == 9);
  CHECK(a.bin_of[1] == 9);
}

TEST_CASE("equal_mass hand split into two bins") {
  TopLabelView view = make_view({0.1, 0.2, 0.8, 0.9}, {1, 0, 1, 0});
  BinAssignment a = bin_assign(view, {BinningScheme::equal_mass, 2});
  CHECK(a.bin_of == std::vector<std::uint32_t>{0, 0, 1, 1});
  CHECK(a.stats.bins[0].count == 2);
  CHECK(a.stats.bins[1].count == 2);
  CHECK(a.stats.bins[0].mean_confidence == doctest::Approx(0.15));
  CHECK(a.stats.bins[1].mean_accuracy == 0.5);
}

TEST_CASE("one bin holds everything and reproduces overall accuracy") {
  TopLabelView view = make_view({0.3, 0.6, 0.8, 0.95}, {1, 0, 1, 1});
  for (BinningScheme scheme : {BinningScheme::equal_width, BinningScheme::equal_mass}) {
    BinAssignment a = bin_assign(view, {scheme, 1});
    for (std::uint32_t b : a.bin_of) CHECK(b == 0);
    CHECK(a.stats.bins[0].mean_accuracy == 0.75);
  }
}

TEST_CASE("equal_mass rejects more bins than examples") {
  TopLabelView view = make_view({0.5, 0.6}, {1, 1});
  try {
    bin_assign(view, {BinningScheme::equal_mass, 3});
    FAIL("expected throw");
  } catch (const CalibError& e) {
    CHECK(e.code() == errc::too_many_bins);
  }
}

TEST_CASE("equal_mass counts differ by at most one across random shapes") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.next_below(400);
    const std::size_t m = 1 + rng.next_below(n);
    TopLabelView view;
    view.confidence.resize(n);
    view.correct.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      view.confidence[i] = rng.next_double();
      view.correct[i] = rng.next_double() < 0.5 ? 1 : 0;
    }
    BinAssignment a = bin_assign(view, {BinningScheme::equal_mass, m});
    std::size_t lo = n, hi = 0, total = 0;
    for (const auto& bin : a.stats.bins) {
      lo = std::min(lo, bin.count);
      hi = std::max(hi, bin.count);
      total += bin.count;
    }
    CHECK(total == n);
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("weighted bin accuracies reconstruct the overall accuracy") {
  Rng rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 20 + rng.next_below(300);
    const std::size_t m = 1 + rng.next_below(20);
    TopLabelView view;
    view.confidence.resize(n);
    view.correct.resize(n);
    std::size_t n_correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      view.confidence[i] = rng.next_double();
      view.correct[i] = rng.next_double() < 0.6 ? 1 : 0;
      n_correct += view.correct[i];
    }
    const BinningScheme scheme =
        rep % 2 == 0 ? BinningScheme::equal_width : BinningScheme::equal_mass;
    BinAssignment a = bin_assign(view, {scheme, std::min(m, n)});
    // count * mean_accuracy is an integer up to rounding, so the weighted sum
    // reconstructs the correct count exactly after rounding.
    double weighted = 0.0;
    std::size_t reconstructed = 0;
    for (const auto& bin : a.stats.bins) {
      weighted += static_cast<double>(bin.count) * bin.mean_accuracy;
      reconstructed +=
          static_cast<std::size_t>(std::llround(static_cast<double>(bin.count) * bin.mean_accuracy));
    }
    CHECK(reconstructed == n_correct);
    CHECK(weighted / static_cast<double>(n) ==
          doctest::Approx(static_cast<double>(n_correct) / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("bin_assign is deterministic under confidence ties") {
  TopLabelView view = make_view({0.7, 0.7, 0.7, 0.7}, {1, 0, 1, 0});
  BinAssignment first = bin_assign(view, {BinningScheme::equal_mass, 2});
  BinAssignment second = bin_assign(view, {BinningScheme::equal_mass, 2});
  CHECK(first.bin_of == second.bin_of);
  // Stable tie-break: original order decides, so the first two land in bin 0.
  CHECK(first.bin_of == std::vector<std::uint32_t>{0, 0, 1, 1});
}

TEST_CASE("equal_width keeps empty bins with count zero") {
  TopLabelView view = make_view({0.95, 0.97, 0.99}, {1, 1, 0});
  BinAssignment a = bin_assign(view, {BinningScheme::equal_width, 10});
  CHECK(a.stats.bins.size() == 10);
  for (std::size_t b = 0; b + 1 < 10; ++b) {
    CHECK(a.stats.bins[b].count == 0);
    CHECK(a.stats.bins[b].mean_accuracy == 0.0);
  }
  CHECK(a.stats.bins[9].count == 3);
}

TEST_CASE("equal_width nominal edges cover [0,1]") {
  TopLabelView view = make_view({0.1, 0.5, 0.9}, {1, 1, 1});
  BinAssignment a = bin_assign(view, {BinningScheme::equal_width, 4});
  CHECK(a.stats.bins[0].lo == 0.0);
  CHECK(a.stats.bins[3].hi == 1.0);
  CHECK(a.stats.bins[1].lo == doctest::Approx(0.25));
}
