#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "calib/analysis.hpp"
#include "calib/decision.hpp"
#include "calib/io.hpp"
#include "calib/metrics.hpp"
#include "calib/recal.hpp"

namespace calib {

enum class TemperatureMode { none, fit_on_split, fixed };

struct TemperaturePolicy {
  TemperatureMode mode = TemperatureMode::fit_on_split;
  double fixed_value = 1.0;  // used when mode is fixed
};

struct ManifestEntry {
  std::string model_name;
  std::string dataset_name;
  std::filesystem::path path;
  PredictionFormat format = PredictionFormat::csv_logits;
  std::filesystem::path exclusion_id_file;  // empty = no exclusions
};

struct EvalConfig {
  EceConfig ece{};
  double split_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::int32_t> class_subset;  // empty = keep all classes
  TemperaturePolicy policy{};
  BinningSpec reliability_binning{BinningScheme::equal_mass, 15};
  std::size_t histogram_bins = 20;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  EvalConfig config;
};

/// Parses the manifest JSON (schema in the README); relative paths resolve
/// against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

/// Manifest serialized back to its JSON text; the report embeds this echo so
/// a run can be reproduced from the report alone.
std::string manifest_to_json(const Manifest& manifest);

/// Parses manifest JSON from a string (paths resolve against base_dir).
Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir);

struct EntryResult {
  std::string model_name;
  std::string dataset_name;
  bool ok = false;
  std::string error;  // failure reason when !ok

  std::size_t n = 0;  // evaluated examples (eval split)
  std::size_t k = 0;
  std::size_t n_excluded = 0;
  std::size_t n_fit = 0;

  double error_rate = 0.0;
  double ece_value = 0.0;
  double nll_value = 0.0;
  double brier_value = 0.0;

  bool has_scaled = false;  // set unless policy is none
  double scaled_error_rate = 0.0;
  double scaled_ece = 0.0;
  double scaled_nll = 0.0;
  double scaled_brier = 0.0;

  bool has_temperature = false;
  Temperature temperature;  // fitted (fit_on_split) or fixed
  Temperature confidence;   // confidence factor of the eval split

  ReliabilityData reliability;
  std::string reliability_ref;  // file stem used by the emitter
};

struct ReportAnalysis {
  std::vector<std::size_t> pareto;            // indices into Report.entries
  std::vector<std::size_t> residual_entries;  // entries the residuals align with
  bool has_residuals = false;
  LinearResiduals residuals;
  std::vector<std::size_t> power_law_entries;  // entries with positive coordinates
  bool has_power_law = false;
  PowerLawFit power_law;
};

struct Report {
  std::vector<EntryResult> entries;  // manifest order
  ReportAnalysis analysis;           // over (error_rate, unscaled ece)
  Manifest manifest;                 // full echo
};

/// Runs the evaluation protocol for every entry: load, drop excluded ids,
/// subset classes, split/fit/scale per the temperature policy, compute
/// metrics on the eval split with and without scaling. Per-entry failures are
/// recorded in the entry; throws only when every entry fails or the manifest
/// itself is unusable.
Report run_evaluate(const Manifest& manifest);

/// Serializes the report with a stable key order.
std::string report_to_json(const Report& report);

/// Flat per-entry metrics table.
std::string report_to_csv(const Report& report);

/// Writes report.json (or report.csv) plus per-entry reliability CSVs and
/// SVGs. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& out_dir,
                                               bool csv_format);

/// Reliability CSV + histogram CSV + self-contained SVG, named by stem.
std::vector<std::filesystem::path> emit_plot_data(const ReliabilityData& data,
                                                  const std::string& stem,
                                                  const std::filesystem::path& out_dir);

/// Cost-plane CSV (header row = cost-ratio grid, first column = abstention
/// grid) + JSON + self-contained SVG heatmap, named by stem.
std::vector<std::filesystem::path> emit_plot_data(const CostPlane& plane, const std::string& stem,
                                                  const std::filesystem::path& out_dir);

}  // namespace calib
