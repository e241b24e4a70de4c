// Compares the OpenMP kernels against their serial references: the
// brute-force scorer for ece, and single-thread runs for the generator and
// the Monte Carlo study. Each comparison asserts bit-identical results
// before reporting the timing, since equality is the whole point.

#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#else
static double omp_get_wtime() { return 0.0; }
static int omp_get_max_threads() { return 1; }
static void omp_set_num_threads(int) {}
#endif

#include "calib/biaslab.hpp"
#include "calib/metrics.hpp"
#include "calib/synth.hpp"

using namespace calib;

namespace {

int failures = 0;

void check(bool ok, const char* what) {
  if (!ok) {
    std::printf("MISMATCH: %s\n", what);
    ++failures;
  }
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx\n", name, serial_s,
              parallel_s, parallel_s > 0 ? serial_s / parallel_s : 0.0);
}

}  // namespace

int main() {
  const int max_threads = omp_get_max_threads();
  std::printf("threads: %d\n\n", max_threads);

  GeneratorSpec spec;
  spec.law = ConfidenceLaw::uniform_law(0.5, 1.0);
  spec.k = 10;
  spec.seed = 7;
  const std::size_t n = 2'000'000;

  // Generation: one thread vs all, same stream per example either way.
  omp_set_num_threads(1);
  double t0 = omp_get_wtime();
  PredictionSet serial_preds = gen_calibrated(spec, n);
  double t1 = omp_get_wtime();
  omp_set_num_threads(max_threads);
  double t2 = omp_get_wtime();
  PredictionSet preds = gen_calibrated(spec, n);
  double t3 = omp_get_wtime();
  check(serial_preds.scores == preds.scores && serial_preds.labels == preds.labels,
        "generation across thread counts");
  report("gen_calibrated n=2e6 k=10", t1 - t0, t3 - t2);

  // ece: parallel kernel vs the literal serial oracle.
  EceConfig cfg;
  t0 = omp_get_wtime();
  const double oracle = brute_force_ece_oracle(preds, cfg);
  t1 = omp_get_wtime();
  t2 = omp_get_wtime();
  const double fast = ece(preds, cfg);
  t3 = omp_get_wtime();
  check(oracle == fast, "ece vs brute-force oracle");
  report("ece equal-mass m=100", t1 - t0, t3 - t2);

  // nll reduction across thread counts.
  omp_set_num_threads(1);
  t0 = omp_get_wtime();
  const double nll_serial = nll(preds);
  t1 = omp_get_wtime();
  omp_set_num_threads(max_threads);
  t2 = omp_get_wtime();
  const double nll_parallel = nll(preds);
  t3 = omp_get_wtime();
  check(nll_serial == nll_parallel, "nll across thread counts");
  report("nll n=2e6", t1 - t0, t3 - t2);

  // Monte Carlo bin-count study across thread counts.
  GeneratorSpec small = spec;
  small.k = 2;
  omp_set_num_threads(1);
  t0 = omp_get_wtime();
  BinCountStudy study_serial = bias_vs_bins_study(small, 2000, {10, 50}, 200, 11);
  t1 = omp_get_wtime();
  omp_set_num_threads(max_threads);
  t2 = omp_get_wtime();
  BinCountStudy study_parallel = bias_vs_bins_study(small, 2000, {10, 50}, 200, 11);
  t3 = omp_get_wtime();
  bool same = study_serial.rows.size() == study_parallel.rows.size();
  for (std::size_t i = 0; same && i < study_serial.rows.size(); ++i) {
    same = study_serial.rows[i].mean == study_parallel.rows[i].mean &&
           study_serial.rows[i].std_error == study_parallel.rows[i].std_error;
  }
  check(same, "bias study across thread counts");
  report("bias study 200 trials", t1 - t0, t3 - t2);

  if (failures > 0) {
    std::printf("\n%d comparison(s) failed\n", failures);
    return 1;
  }
  std::printf("\nall parallel results bit-identical to serial references\n");
  return 0;
}
