#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "calib/decision.hpp"
#include "calib/metrics.hpp"
#include "calib/recal.hpp"
#include "calib/synth.hpp"

using namespace calib;

namespace {

TopLabelView hand_view() {
  static const std::vector<double> conf{0.9, 0.8, 0.6, 0.5};
  static const std::vector<std::uint8_t> correct{1, 1, 0, 0};
  TopLabelView v;
  v.confidence = conf;
  v.correct = correct;
  return v;
}

PredictionSet calibrated(std::uint64_t seed, std::size_t n, std::size_t k = 5) {
  GeneratorSpec gen;
  gen.law = ConfidenceLaw::uniform_law(1.0 / static_cast<double>(k) + 0.05, 1.0);
  gen.k = k;
  gen.seed = seed;
  return gen_calibrated(gen, n);
}

}  // namespace

TEST_CASE("risk on a worked example") {
  TopLabelView v = hand_view();
  CHECK(risk_at_coverage(v, 0.0) == 0.5);
  CHECK(risk_at_coverage(v, 0.5) == 0.0);                           // keep the two confident hits
  CHECK(risk_at_coverage(v, 0.25) == doctest::Approx(1.0 / 3.0));   // three kept, one wrong
  CHECK(risk_at_coverage(v, 1.0) == 0.0);                           // nothing retained
}

TEST_CASE("rates outside the unit interval are rejected") {
  TopLabelView v = hand_view();
  CHECK_THROWS_AS(risk_at_coverage(v, -0.1), CalibError);
  CHECK_THROWS_AS(risk_at_coverage(v, 1.5), CalibError);
  CHECK_THROWS_AS(risk_at_coverage(v, std::numeric_limits<double>::quiet_NaN()), CalibError);
  TopLabelView empty;
  CHECK_THROWS_AS(risk_at_coverage(empty, 0.5), CalibError);
}

TEST_CASE("cost on a worked example") {
  TopLabelView v = hand_view();
  // rho * r + (1 - r) * risk = 0.3 * 0.5 + 0.5 * 0.
  CHECK(selective_cost(v, 0.5, 0.3) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(selective_cost(v, 0.0, 0.3) == 0.5);
  CHECK(selective_cost(v, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(selective_cost(v, 0.5, -0.01), CalibError);
}

TEST_CASE("retained count snaps through float noise in the rate") {
  // 0.55 * 20 = 11.000000000000002 in doubles; a naive ceil would retain 12.
  std::vector<double> conf(20);
  std::vector<std::uint8_t> correct(20, 0);
  for (std::size_t i = 0; i < 20; ++i) {
    conf[i] = 1.0 - 0.01 * static_cast<double>(i);
    correct[i] = i < 11 ? 1 : 0;
  }
  TopLabelView v;
  v.confidence = conf;
  v.correct = correct;
  CHECK(risk_at_coverage(v, 0.45) == 0.0);
}

TEST_CASE("ties keep the earliest index") {
  std::vector<double> conf{0.8, 0.8, 0.8};
  std::vector<std::uint8_t> correct{0, 1, 1};
  TopLabelView v;
  v.confidence = conf;
  v.correct = correct;
  CHECK(risk_at_coverage(v, 2.0 / 3.0) == 1.0);
}

TEST_CASE("risk falls with abstention on calibrated data") {
  TopLabelView v = top_label_view(calibrated(21, 20000));
  double prev = risk_at_coverage(v, 0.0);
  for (double r : {0.2, 0.4, 0.6, 0.8}) {
    const double risk = risk_at_coverage(v, r);
    const std::size_t retained =
        static_cast<std::size_t>(std::ceil((1.0 - r) * 20000.0 - 0.5));
    const double slack = 2.0 * std::sqrt(0.25 / static_cast<double>(retained));
    CHECK(risk <= prev + slack);
    prev = risk;
  }
}

TEST_CASE("temperature scaling leaves the risk curve untouched") {
  // Rows share one off-class mass split, so scaling preserves confidence order.
  PredictionSet base = calibrated(22, 5000);
  TopLabelView before = top_label_view(base);
  for (double t : {0.5, 2.0}) {
    TopLabelView after = top_label_view(apply_temperature(base, t));
    for (double r : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
      CHECK(risk_at_coverage(after, r) == risk_at_coverage(before, r));
    }
  }
}

TEST_CASE("cost plane against itself is flat") {
  TopLabelView v = top_label_view(calibrated(23, 2000));
  std::vector<double> ratios{0.05, 0.2, 0.5};
  std::vector<double> rates{0.0, 0.3, 0.6};
  CostPlane plane = cost_plane(v, v, ratios, rates);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      CHECK(plane.at(i, j) == 1.0);
    }
  }
}

TEST_CASE("plane rows at the extremes") {
  TopLabelView a = hand_view();
  std::vector<double> bconf{0.9, 0.8, 0.6, 0.5};
  std::vector<std::uint8_t> bcorrect{1, 0, 0, 0};
  TopLabelView b;
  b.confidence = bconf;
  b.correct = bcorrect;
  std::vector<double> ratios{0.1, 0.4};
  std::vector<double> rates{0.0, 1.0};
  CostPlane plane = cost_plane(a, b, ratios, rates, "first", "second");
  // No abstention: pure error-rate ratio, independent of rho.
  CHECK(plane.at(0, 0) == doctest::Approx(0.5 / 0.75).epsilon(1e-12));
  CHECK(plane.at(0, 1) == doctest::Approx(0.5 / 0.75).epsilon(1e-12));
  // Full abstention: both pay rho exactly.
  CHECK(plane.at(1, 0) == 1.0);
  CHECK(plane.at(1, 1) == 1.0);
  CHECK(plane.model_a == "first");
  CHECK(plane.model_b == "second");
  CHECK(plane.cost_a[0] == 0.5);
  CHECK(plane.cost_b[0] == 0.75);
}

TEST_CASE("zero-cost baselines produce the sentinel values") {
  std::vector<double> conf{0.9, 0.8};
  std::vector<std::uint8_t> right{1, 1};
  std::vector<std::uint8_t> wrong{0, 0};
  TopLabelView perfect;
  perfect.confidence = conf;
  perfect.correct = right;
  TopLabelView broken;
  broken.confidence = conf;
  broken.correct = wrong;
  std::vector<double> ratios{0.25};
  std::vector<double> rates{0.0};
  CostPlane same = cost_plane(perfect, perfect, ratios, rates);
  CHECK(same.at(0, 0) == 1.0);  // 0 / 0 reads as parity
  CostPlane ratio = cost_plane(broken, perfect, ratios, rates);
  CHECK(std::isinf(ratio.at(0, 0)));
  CHECK(ratio.at(0, 0) > 0.0);
}

TEST_CASE("plane axes are validated") {
  TopLabelView v = hand_view();
  std::vector<double> ratios{0.1};
  std::vector<double> rates{0.0};
  std::vector<double> bad_ratio{-0.1};
  std::vector<double> bad_rate{1.2};
  std::vector<double> unsorted{0.5, 0.2};
  std::vector<double> none{};
  CHECK_THROWS_AS(cost_plane(v, v, bad_ratio, rates), CalibError);
  CHECK_THROWS_AS(cost_plane(v, v, ratios, bad_rate), CalibError);
  CHECK_THROWS_AS(cost_plane(v, v, ratios, unsorted), CalibError);
  CHECK_THROWS_AS(cost_plane(v, v, none, rates), CalibError);
  CHECK_THROWS_AS(cost_plane(v, v, ratios, none), CalibError);
}

TEST_CASE("plane agrees with pointwise costs") {
  TopLabelView a = top_label_view(calibrated(31, 500));
  TopLabelView b = top_label_view(calibrated(32, 500, 3));
  std::vector<double> ratios{0.05, 0.15, 0.35};
  std::vector<double> rates{0.0, 0.25, 0.5, 0.75};
  CostPlane plane = cost_plane(a, b, ratios, rates);
  REQUIRE(plane.relative_cost.size() == rates.size() * ratios.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      const double ca = selective_cost(a, rates[i], ratios[j]);
      const double cb = selective_cost(b, rates[i], ratios[j]);
      CHECK(plane.cost_a[i * ratios.size() + j] == ca);
      CHECK(plane.cost_b[i * ratios.size() + j] == cb);
      CHECK(plane.at(i, j) == ca / cb);
    }
  }
}
