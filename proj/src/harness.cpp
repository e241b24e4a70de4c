#include "calib/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "json.hpp"

namespace calib {

using ordered_json = nlohmann::ordered_json;

namespace {

// ---- enum <-> string -------------------------------------------------------

const char* to_string(BinningScheme scheme) {
  return scheme == BinningScheme::equal_mass ? "equal_mass" : "equal_width";
}
const char* to_string(EceNorm norm) {
  switch (norm) {
    case EceNorm::l1: return "l1";
    case EceNorm::l2: return "l2";
    case EceNorm::rms: return "rms";
  }
  return "l1";
}
const char* to_string(EceAggregation agg) {
  switch (agg) {
    case EceAggregation::top_label: return "top_label";
    case EceAggregation::class_wise: return "class_wise";
    case EceAggregation::all_label: return "all_label";
  }
  return "top_label";
}
const char* to_string(PredictionFormat format) {
  return format == PredictionFormat::csv_logits ? "csv_logits" : "csv_probs";
}
const char* to_string(TemperatureMode mode) {
  switch (mode) {
    case TemperatureMode::none: return "none";
    case TemperatureMode::fit_on_split: return "fit_on_split";
    case TemperatureMode::fixed: return "fixed";
  }
  return "none";
}

BinningScheme scheme_from(const std::string& s) {
  if (s == "equal_mass") return BinningScheme::equal_mass;
  if (s == "equal_width") return BinningScheme::equal_width;
  throw CalibError(errc::parse_error, "unknown binning scheme '" + s + "'");
}
EceNorm norm_from(const std::string& s) {
  if (s == "l1") return EceNorm::l1;
  if (s == "l2") return EceNorm::l2;
  if (s == "rms") return EceNorm::rms;
  throw CalibError(errc::parse_error, "unknown norm '" + s + "'");
}
EceAggregation aggregation_from(const std::string& s) {
  if (s == "top_label") return EceAggregation::top_label;
  if (s == "class_wise") return EceAggregation::class_wise;
  if (s == "all_label") return EceAggregation::all_label;
  throw CalibError(errc::parse_error, "unknown aggregation '" + s + "'");
}
PredictionFormat format_from(const std::string& s) {
  if (s == "csv_logits") return PredictionFormat::csv_logits;
  if (s == "csv_probs") return PredictionFormat::csv_probs;
  throw CalibError(errc::parse_error, "unknown prediction format '" + s + "'");
}
TemperatureMode mode_from(const std::string& s) {
  if (s == "none") return TemperatureMode::none;
  if (s == "fit_on_split") return TemperatureMode::fit_on_split;
  if (s == "fixed") return TemperatureMode::fixed;
  throw CalibError(errc::parse_error, "unknown temperature policy '" + s + "'");
}

// ---- manifest JSON ---------------------------------------------------------

ordered_json binning_to_json(const BinningSpec& spec) {
  return ordered_json{{"scheme", to_string(spec.scheme)}, {"num_bins", spec.num_bins}};
}

BinningSpec binning_from_json(const ordered_json& j, BinningSpec fallback) {
  BinningSpec spec = fallback;
  if (j.contains("scheme")) spec.scheme = scheme_from(j.at("scheme").get<std::string>());
  if (j.contains("num_bins")) spec.num_bins = j.at("num_bins").get<std::size_t>();
  return spec;
}

ordered_json config_to_json(const EvalConfig& cfg) {
  ordered_json policy{{"mode", to_string(cfg.policy.mode)}};
  if (cfg.policy.mode == TemperatureMode::fixed) policy["value"] = cfg.policy.fixed_value;
  return ordered_json{
      {"ece",
       {{"scheme", to_string(cfg.ece.binning.scheme)},
        {"num_bins", cfg.ece.binning.num_bins},
        {"norm", to_string(cfg.ece.norm)},
        {"aggregation", to_string(cfg.ece.aggregation)},
        {"class_wise_bins", cfg.ece.class_wise_bins}}},
      {"split_fraction", cfg.split_fraction},
      {"seed", cfg.seed},
      {"class_subset", cfg.class_subset},
      {"temperature_policy", policy},
      {"reliability", binning_to_json(cfg.reliability_binning)},
      {"histogram_bins", cfg.histogram_bins},
  };
}

EvalConfig config_from_json(const ordered_json& j) {
  EvalConfig cfg;
  if (j.contains("ece")) {
    const ordered_json& e = j.at("ece");
    cfg.ece.binning = binning_from_json(e, cfg.ece.binning);
    if (e.contains("norm")) cfg.ece.norm = norm_from(e.at("norm").get<std::string>());
    if (e.contains("aggregation")) {
      cfg.ece.aggregation = aggregation_from(e.at("aggregation").get<std::string>());
    }
    if (e.contains("class_wise_bins")) {
      cfg.ece.class_wise_bins = e.at("class_wise_bins").get<std::size_t>();
    }
  }
  if (j.contains("split_fraction")) cfg.split_fraction = j.at("split_fraction").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("class_subset")) {
    cfg.class_subset = j.at("class_subset").get<std::vector<std::int32_t>>();
  }
  if (j.contains("temperature_policy")) {
    const ordered_json& p = j.at("temperature_policy");
    cfg.policy.mode = mode_from(p.at("mode").get<std::string>());
    if (cfg.policy.mode == TemperatureMode::fixed) {
      cfg.policy.fixed_value = p.at("value").get<double>();
    }
  }
  if (j.contains("reliability")) {
    cfg.reliability_binning = binning_from_json(j.at("reliability"), cfg.reliability_binning);
  }
  if (j.contains("histogram_bins")) cfg.histogram_bins = j.at("histogram_bins").get<std::size_t>();
  return cfg;
}

void check_manifest(const Manifest& manifest) {
  if (manifest.entries.empty()) {
    throw CalibError(errc::invalid_argument, "manifest has no entries");
  }
  if (!(manifest.config.split_fraction > 0.0 && manifest.config.split_fraction < 1.0)) {
    throw CalibError(errc::invalid_argument, "split_fraction must lie strictly between 0 and 1");
  }
  std::unordered_set<std::string> seen;
  for (const ManifestEntry& entry : manifest.entries) {
    if (entry.model_name.empty()) {
      throw CalibError(errc::invalid_argument, "manifest entry without a model name");
    }
    std::string key = entry.model_name + "\x1f" + entry.dataset_name;
    if (!seen.insert(key).second) {
      throw CalibError(errc::invalid_argument, "duplicate manifest entry for model '" +
                                                   entry.model_name + "', dataset '" +
                                                   entry.dataset_name + "'");
    }
  }
}

// ---- helpers ---------------------------------------------------------------

PredictionSet drop_ids(const PredictionSet& preds, const std::vector<std::string>& excluded,
                       std::size_t& dropped) {
  if (preds.example_ids.empty()) {
    throw CalibError(errc::invalid_argument,
                     "exclusion list given but the prediction file has no id column");
  }
  std::unordered_set<std::string> gone(excluded.begin(), excluded.end());
  std::vector<std::size_t> keep;
  keep.reserve(preds.n);
  for (std::size_t i = 0; i < preds.n; ++i) {
    if (gone.find(preds.example_ids[i]) == gone.end()) keep.push_back(i);
  }
  dropped = preds.n - keep.size();
  if (keep.empty()) throw CalibError(errc::empty_input, "every example is on the exclusion list");
  if (dropped == 0) return preds;

  PredictionSet out;
  out.n = keep.size();
  out.k = preds.k;
  out.kind = preds.kind;
  out.model_name = preds.model_name;
  out.dataset_name = preds.dataset_name;
  out.scores.resize(out.n * out.k);
  out.labels.resize(out.n);
  out.example_ids.resize(out.n);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::copy_n(preds.scores.data() + keep[i] * preds.k, preds.k, out.scores.data() + i * preds.k);
    out.labels[i] = preds.labels[keep[i]];
    out.example_ids[i] = preds.example_ids[keep[i]];
  }
  return out;
}

std::string sanitize(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '.' || ch == '-' || ch == '_';
    out += ok ? ch : '_';
  }
  if (out.empty()) out = "entry";
  return out;
}

EntryResult evaluate_entry(const ManifestEntry& entry, const EvalConfig& cfg) {
  EntryResult res;
  res.model_name = entry.model_name;
  res.dataset_name = entry.dataset_name;
  res.reliability_ref = sanitize(entry.model_name) + "_" + sanitize(entry.dataset_name);

  PredictionSet preds = load_predictions(entry.path, entry.format);
  preds.model_name = entry.model_name;
  preds.dataset_name = entry.dataset_name;

  if (!entry.exclusion_id_file.empty()) {
    // Exclusions come first: fit and eval splits never see excluded ids.
    preds = drop_ids(preds, load_id_list(entry.exclusion_id_file), res.n_excluded);
  }
  if (!cfg.class_subset.empty()) {
    preds = subset_classes(preds, cfg.class_subset);
  }

  PredictionSet eval = preds;
  PredictionSet scaled;
  switch (cfg.policy.mode) {
    case TemperatureMode::none:
      break;
    case TemperatureMode::fit_on_split: {
      auto split = split_holdout(preds, cfg.split_fraction, cfg.seed);
      res.n_fit = split.first.n;
      eval = std::move(split.second);
      res.temperature = fit_temperature(split.first);
      res.has_temperature = true;
      scaled = apply_temperature(eval, res.temperature.value);
      res.has_scaled = true;
      break;
    }
    case TemperatureMode::fixed: {
      res.temperature.value = cfg.policy.fixed_value;
      res.temperature.final_nll = mean_nll_at_temperature(eval, cfg.policy.fixed_value);
      res.temperature.iterations = 0;
      res.temperature.hit_boundary = false;
      res.has_temperature = true;
      scaled = apply_temperature(eval, cfg.policy.fixed_value);
      res.has_scaled = true;
      break;
    }
  }

  res.n = eval.n;
  res.k = eval.k;
  res.error_rate = classification_error(eval);
  res.ece_value = ece(eval, cfg.ece);
  res.nll_value = nll(eval);
  res.brier_value = brier(eval);
  if (res.has_scaled) {
    res.scaled_error_rate = classification_error(scaled);
    res.scaled_ece = ece(scaled, cfg.ece);
    res.scaled_nll = nll(scaled);
    res.scaled_brier = brier(scaled);
  }
  res.confidence = confidence_factor(eval);
  res.reliability = reliability_data(eval, cfg.reliability_binning, cfg.histogram_bins);
  res.ok = true;
  return res;
}

ordered_json temperature_to_json(const Temperature& t) {
  return ordered_json{{"value", t.value},
                      {"final_nll", t.final_nll},
                      {"iterations", t.iterations},
                      {"hit_boundary", t.hit_boundary}};
}

ordered_json conventions_json() {
  return ordered_json{
      {"temperature", "scaled logits are z / T; fitted T > 1 flags overconfidence"},
      {"temperature_range", {kTemperatureMin, kTemperatureMax}},
      {"temperature_search", "golden-section on log T, absolute tolerance 1e-5"},
      {"nll_clamp", kLogClamp},
      {"brier", "full multiclass squared distance, range [0, 2]"},
      {"probability_sum_tolerance", kProbSumTolerance},
      {"moment_divisor", "n - 1 (unbiased sample moments)"},
      {"rng", "splitmix64 streams; stream seeds via derive_seed(base, index)"},
      {"float_format", "%.17g"},
      {"analysis_coordinates", "x = classification error, y = unscaled ece, lower is better"},
  };
}

// JSON has no infinity; cost-plane cells may hold one.
ordered_json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

// ---- SVG helpers -----------------------------------------------------------

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string reliability_svg(const ReliabilityData& data, const std::string& title) {
  const double width = 560.0, hist_h = 140.0, plot_h = 360.0, margin = 48.0;
  const double height = hist_h + plot_h + 3 * margin;
  const double plot_w = width - 2 * margin;
  const double plot_top = hist_h + 2 * margin;

  auto x_of = [&](double conf) { return margin + conf * plot_w; };
  auto y_of = [&](double acc) { return plot_top + (1.0 - acc) * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_number(width) + "\" height=\"" +
       svg_number(height) + "\" viewBox=\"0 0 " + svg_number(width) + " " + svg_number(height) +
       "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg_number(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" + xml_escape(title) + "</text>\n";

  // Confidence histogram.
  std::size_t max_count = 1;
  for (std::size_t c : data.histogram) max_count = std::max(max_count, c);
  const double cell_w = plot_w / static_cast<double>(data.histogram.size());
  for (std::size_t i = 0; i < data.histogram.size(); ++i) {
    const double h = hist_h * static_cast<double>(data.histogram[i]) / static_cast<double>(max_count);
    s += "<rect x=\"" + svg_number(margin + static_cast<double>(i) * cell_w) + "\" y=\"" +
         svg_number(margin + hist_h - h) + "\" width=\"" + svg_number(cell_w) + "\" height=\"" +
         svg_number(h) + "\" fill=\"#9db8d9\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  s += "<line x1=\"" + svg_number(margin) + "\" y1=\"" + svg_number(margin + hist_h) + "\" x2=\"" +
       svg_number(margin + plot_w) + "\" y2=\"" + svg_number(margin + hist_h) +
       "\" stroke=\"#444444\"/>\n";

  // Reliability panel: frame, diagonal, one marker per bin.
  s += "<rect x=\"" + svg_number(margin) + "\" y=\"" + svg_number(plot_top) + "\" width=\"" +
       svg_number(plot_w) + "\" height=\"" + svg_number(plot_h) +
       "\" fill=\"none\" stroke=\"#444444\"/>\n";
  s += "<line x1=\"" + svg_number(x_of(0)) + "\" y1=\"" + svg_number(y_of(0)) + "\" x2=\"" +
       svg_number(x_of(1)) + "\" y2=\"" + svg_number(y_of(1)) +
       "\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n";
  for (const auto& bin : data.bins.bins) {
    if (bin.count == 0) continue;
    s += "<circle cx=\"" + svg_number(x_of(bin.mean_confidence)) + "\" cy=\"" +
         svg_number(y_of(bin.mean_accuracy)) + "\" r=\"3.5\" fill=\"#c0392b\"/>\n";
  }
  for (double tick : {0.0, 0.5, 1.0}) {
    s += "<text x=\"" + svg_number(x_of(tick)) + "\" y=\"" + svg_number(plot_top + plot_h + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         svg_number(tick) + "</text>\n";
    s += "<text x=\"" + svg_number(margin - 8) + "\" y=\"" + svg_number(y_of(tick) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + svg_number(tick) +
         "</text>\n";
  }
  s += "<text x=\"" + svg_number(margin + plot_w / 2) + "\" y=\"" +
       svg_number(plot_top + plot_h + 36) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">confidence</text>\n";
  s += "<text x=\"16\" y=\"" + svg_number(plot_top + plot_h / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
       "16 " + svg_number(plot_top + plot_h / 2) + ")\">accuracy</text>\n";
  s += "</svg>\n";
  return s;
}

std::string heat_color(double ratio) {
  if (!std::isfinite(ratio)) return "#5e0012";
  double v = std::log2(ratio);
  if (v < -2.0) v = -2.0;
  if (v > 2.0) v = 2.0;
  const double t = (v + 2.0) / 4.0;  // 0 = A far cheaper (blue), 1 = B far cheaper (red)
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(59 + u * (255 - 59));
    g = static_cast<int>(76 + u * (255 - 76));
    b = static_cast<int>(192 + u * (255 - 192));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(255 + u * (180 - 255));
    g = static_cast<int>(255 + u * (4 - 255));
    b = static_cast<int>(255 + u * (38 - 255));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string costplane_svg(const CostPlane& plane, const std::string& title) {
  const std::size_t rows = plane.abstention_rates.size();
  const std::size_t cols = plane.cost_ratios.size();
  const double margin = 56.0, cell = std::min(420.0 / static_cast<double>(std::max(rows, cols)), 40.0);
  const double grid_w = cell * static_cast<double>(cols);
  const double grid_h = cell * static_cast<double>(rows);
  const double width = grid_w + 2 * margin;
  const double height = grid_h + 2 * margin + 40.0;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_number(width) + "\" height=\"" +
       svg_number(height) + "\" viewBox=\"0 0 " + svg_number(width) + " " + svg_number(height) +
       "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg_number(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"14\">" + xml_escape(title) + "</text>\n";

  // Highest abstention rate in the top row, matching the usual plane layout.
  for (std::size_t ri = 0; ri < rows; ++ri) {
    const double y = margin + grid_h - cell * static_cast<double>(ri + 1);
    for (std::size_t ci = 0; ci < cols; ++ci) {
      const double value = plane.at(ri, ci);
      s += "<rect x=\"" + svg_number(margin + cell * static_cast<double>(ci)) + "\" y=\"" +
           svg_number(y) + "\" width=\"" + svg_number(cell) + "\" height=\"" + svg_number(cell) +
           "\" fill=\"" + heat_color(value) + "\"><title>r=" +
           svg_number(plane.abstention_rates[ri]) + " rho=" + svg_number(plane.cost_ratios[ci]) +
           " ratio=" + (std::isfinite(value) ? format_double(value) : std::string("inf")) +
           "</title></rect>\n";
    }
  }
  s += "<rect x=\"" + svg_number(margin) + "\" y=\"" + svg_number(margin) + "\" width=\"" +
       svg_number(grid_w) + "\" height=\"" + svg_number(grid_h) +
       "\" fill=\"none\" stroke=\"#444444\"/>\n";

  s += "<text x=\"" + svg_number(margin) + "\" y=\"" + svg_number(margin + grid_h + 16) +
       "\" font-family=\"sans-serif\" font-size=\"11\">rho=" + svg_number(plane.cost_ratios.front()) +
       "</text>\n";
  s += "<text x=\"" + svg_number(margin + grid_w) + "\" y=\"" + svg_number(margin + grid_h + 16) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">rho=" +
       svg_number(plane.cost_ratios.back()) + "</text>\n";
  s += "<text x=\"" + svg_number(margin - 6) + "\" y=\"" + svg_number(margin + grid_h - 4) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">r=" +
       svg_number(plane.abstention_rates.front()) + "</text>\n";
  s += "<text x=\"" + svg_number(margin - 6) + "\" y=\"" + svg_number(margin + 12) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">r=" +
       svg_number(plane.abstention_rates.back()) + "</text>\n";
  s += "<text x=\"" + svg_number(margin) + "\" y=\"" + svg_number(margin + grid_h + 34) +
       "\" font-family=\"sans-serif\" font-size=\"11\">blue: " + xml_escape(plane.model_a) +
       " cheaper; red: " + xml_escape(plane.model_b) + " cheaper</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace

// ---- manifest --------------------------------------------------------------

Manifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw CalibError(errc::parse_error, std::string("manifest JSON: ") + e.what());
  }
  try {
    Manifest manifest;
    if (!j.contains("entries") || !j.at("entries").is_array()) {
      throw CalibError(errc::parse_error, "manifest needs an 'entries' array");
    }
    for (const ordered_json& e : j.at("entries")) {
      ManifestEntry entry;
      entry.model_name = e.at("model").get<std::string>();
      entry.dataset_name = e.value("dataset", std::string{});
      std::filesystem::path p = e.at("path").get<std::string>();
      entry.path = p.is_relative() ? base_dir / p : p;
      entry.format = format_from(e.value("format", std::string{"csv_logits"}));
      if (e.contains("exclusion_id_file")) {
        std::filesystem::path x = e.at("exclusion_id_file").get<std::string>();
        entry.exclusion_id_file = x.is_relative() ? base_dir / x : x;
      }
      manifest.entries.push_back(std::move(entry));
    }
    if (j.contains("config")) manifest.config = config_from_json(j.at("config"));
    check_manifest(manifest);
    return manifest;
  } catch (const ordered_json::exception& e) {
    throw CalibError(errc::parse_error, std::string("manifest JSON: ") + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CalibError(errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str(), path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  ordered_json entries = ordered_json::array();
  for (const ManifestEntry& entry : manifest.entries) {
    ordered_json e{{"model", entry.model_name},
                   {"dataset", entry.dataset_name},
                   {"path", entry.path.string()},
                   {"format", to_string(entry.format)}};
    if (!entry.exclusion_id_file.empty()) {
      e["exclusion_id_file"] = entry.exclusion_id_file.string();
    }
    entries.push_back(std::move(e));
  }
  ordered_json j{{"entries", std::move(entries)}, {"config", config_to_json(manifest.config)}};
  return j.dump(2) + "\n";
}

// ---- evaluation ------------------------------------------------------------

Report run_evaluate(const Manifest& manifest) {
  check_manifest(manifest);
  Report report;
  report.manifest = manifest;

  for (const ManifestEntry& entry : manifest.entries) {
    EntryResult res;
    try {
      res = evaluate_entry(entry, manifest.config);
    } catch (const std::exception& e) {
      res = EntryResult{};
      res.model_name = entry.model_name;
      res.dataset_name = entry.dataset_name;
      res.error = e.what();
    }
    report.entries.push_back(std::move(res));
  }

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    if (report.entries[i].ok) ok.push_back(i);
  }
  if (ok.empty()) {
    throw CalibError(errc::io_error,
                     "all manifest entries failed; first error: " + report.entries.front().error);
  }

  // Cross-model analyses over (classification error, unscaled ece).
  std::vector<double> err, cal;
  for (std::size_t i : ok) {
    err.push_back(report.entries[i].error_rate);
    cal.push_back(report.entries[i].ece_value);
  }
  for (std::size_t local : pareto_front(err, cal)) {
    report.analysis.pareto.push_back(ok[local]);
  }
  if (ok.size() >= 2) {
    try {
      report.analysis.residuals = residualize(err, cal);
      report.analysis.residual_entries = ok;
      report.analysis.has_residuals = true;
    } catch (const CalibError&) {
      // all x equal; leave the block absent
    }
  }
  std::vector<double> px, py;
  std::vector<std::size_t> pidx;
  for (std::size_t i : ok) {
    if (report.entries[i].error_rate > 0.0 && report.entries[i].ece_value > 0.0) {
      px.push_back(report.entries[i].error_rate);
      py.push_back(report.entries[i].ece_value);
      pidx.push_back(i);
    }
  }
  if (px.size() >= 3) {
    try {
      report.analysis.power_law = fit_power_law(px, py, 2000, manifest.config.seed);
      report.analysis.power_law_entries = pidx;
      report.analysis.has_power_law = true;
    } catch (const CalibError&) {
      // degenerate x spread; leave the block absent
    }
  }
  return report;
}

// ---- serialization ---------------------------------------------------------

std::string report_to_json(const Report& report) {
  ordered_json entries = ordered_json::array();
  for (const EntryResult& res : report.entries) {
    ordered_json e{{"model", res.model_name}, {"dataset", res.dataset_name}, {"ok", res.ok}};
    if (!res.ok) {
      e["error"] = res.error;
      entries.push_back(std::move(e));
      continue;
    }
    e["n"] = res.n;
    e["k"] = res.k;
    e["n_excluded"] = res.n_excluded;
    e["n_fit"] = res.n_fit;
    e["metrics"] = ordered_json{{"error", res.error_rate},
                                {"ece", res.ece_value},
                                {"nll", res.nll_value},
                                {"brier", res.brier_value}};
    if (res.has_scaled) {
      e["scaled_metrics"] = ordered_json{{"error", res.scaled_error_rate},
                                         {"ece", res.scaled_ece},
                                         {"nll", res.scaled_nll},
                                         {"brier", res.scaled_brier}};
    }
    if (res.has_temperature) e["temperature"] = temperature_to_json(res.temperature);
    e["confidence_factor"] = temperature_to_json(res.confidence);
    e["reliability_ref"] = res.reliability_ref;
    ordered_json bins = ordered_json::array();
    for (const auto& bin : res.reliability.bins.bins) {
      bins.push_back(ordered_json{{"lo", bin.lo},
                                  {"hi", bin.hi},
                                  {"count", bin.count},
                                  {"mean_confidence", bin.mean_confidence},
                                  {"mean_accuracy", bin.mean_accuracy}});
    }
    e["reliability"] = ordered_json{{"bins", std::move(bins)},
                                    {"histogram", res.reliability.histogram},
                                    {"n", res.reliability.n}};
    entries.push_back(std::move(e));
  }

  ordered_json analysis{{"coordinates", "x = classification error, y = unscaled ece"},
                        {"pareto_front", report.analysis.pareto}};
  if (report.analysis.has_residuals) {
    analysis["residuals"] = ordered_json{{"entries", report.analysis.residual_entries},
                                         {"beta0", report.analysis.residuals.beta0},
                                         {"beta1", report.analysis.residuals.beta1},
                                         {"values", report.analysis.residuals.residuals}};
  }
  if (report.analysis.has_power_law) {
    const PowerLawFit& fit = report.analysis.power_law;
    analysis["power_law"] = ordered_json{{"entries", report.analysis.power_law_entries},
                                         {"a", fit.a},
                                         {"k", fit.k},
                                         {"a_ci", {fit.a_lo, fit.a_hi}},
                                         {"k_ci", {fit.k_lo, fit.k_hi}},
                                         {"resamples", fit.resamples},
                                         {"seed", fit.seed}};
  }

  ordered_json j{{"report_version", 1},
                 {"entries", std::move(entries)},
                 {"analysis", std::move(analysis)},
                 {"conventions", conventions_json()},
                 {"manifest", ordered_json::parse(manifest_to_json(report.manifest))}};
  return j.dump(2) + "\n";
}

std::string report_to_csv(const Report& report) {
  std::string out =
      "model,dataset,ok,n,k,n_excluded,n_fit,error,ece,nll,brier,scaled_error,scaled_ece,"
      "scaled_nll,scaled_brier,temperature,temperature_hit_boundary,confidence_factor,error_"
      "message\n";
  for (const EntryResult& res : report.entries) {
    out += csv_escape(res.model_name) + ',' + csv_escape(res.dataset_name) + ',';
    out += res.ok ? "1," : "0,";
    if (!res.ok) {
      out += ",,,,,,,,,,,,,,," + csv_escape(res.error) + "\n";
      continue;
    }
    out += std::to_string(res.n) + ',' + std::to_string(res.k) + ',' +
           std::to_string(res.n_excluded) + ',' + std::to_string(res.n_fit) + ',';
    out += format_double(res.error_rate) + ',' + format_double(res.ece_value) + ',' +
           format_double(res.nll_value) + ',' + format_double(res.brier_value) + ',';
    if (res.has_scaled) {
      out += format_double(res.scaled_error_rate) + ',' + format_double(res.scaled_ece) + ',' +
             format_double(res.scaled_nll) + ',' + format_double(res.scaled_brier) + ',';
    } else {
      out += ",,,,";
    }
    if (res.has_temperature) {
      out += format_double(res.temperature.value) + ',' +
             (res.temperature.hit_boundary ? "1" : "0") + ',';
    } else {
      out += ",,";
    }
    out += format_double(res.confidence.value) + ",\n";
  }
  return out;
}

// ---- emitters ---------------------------------------------------------------

std::vector<std::filesystem::path> emit_plot_data(const ReliabilityData& data,
                                                  const std::string& stem,
                                                  const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;

  std::string rel = "bin,lo,hi,count,mean_confidence,mean_accuracy\n";
  for (std::size_t b = 0; b < data.bins.bins.size(); ++b) {
    const auto& bin = data.bins.bins[b];
    rel += std::to_string(b) + ',' + format_double(bin.lo) + ',' + format_double(bin.hi) + ',' +
           std::to_string(bin.count) + ',' + format_double(bin.mean_confidence) + ',' +
           format_double(bin.mean_accuracy) + '\n';
  }
  std::filesystem::path rel_path = out_dir / (stem + ".reliability.csv");
  write_text_atomic(rel_path, rel);
  written.push_back(rel_path);

  std::string hist = "cell,lo,hi,count\n";
  const double h = static_cast<double>(data.histogram.size());
  for (std::size_t c = 0; c < data.histogram.size(); ++c) {
    hist += std::to_string(c) + ',' + format_double(static_cast<double>(c) / h) + ',' +
            format_double(static_cast<double>(c + 1) / h) + ',' + std::to_string(data.histogram[c]) +
            '\n';
  }
  std::filesystem::path hist_path = out_dir / (stem + ".histogram.csv");
  write_text_atomic(hist_path, hist);
  written.push_back(hist_path);

  std::filesystem::path svg_path = out_dir / (stem + ".reliability.svg");
  write_text_atomic(svg_path, reliability_svg(data, stem));
  written.push_back(svg_path);
  return written;
}

std::vector<std::filesystem::path> emit_plot_data(const CostPlane& plane, const std::string& stem,
                                                  const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  const std::size_t cols = plane.cost_ratios.size();

  std::string csv = "abstention_rate";
  for (double rho : plane.cost_ratios) csv += ',' + format_double(rho);
  csv += '\n';
  for (std::size_t ri = 0; ri < plane.abstention_rates.size(); ++ri) {
    csv += format_double(plane.abstention_rates[ri]);
    for (std::size_t ci = 0; ci < cols; ++ci) {
      const double v = plane.at(ri, ci);
      csv += ',';
      csv += std::isfinite(v) ? format_double(v) : "inf";
    }
    csv += '\n';
  }
  std::filesystem::path csv_path = out_dir / (stem + ".costplane.csv");
  write_text_atomic(csv_path, csv);
  written.push_back(csv_path);

  ordered_json rel = ordered_json::array();
  ordered_json ca = ordered_json::array();
  ordered_json cb = ordered_json::array();
  for (std::size_t ri = 0; ri < plane.abstention_rates.size(); ++ri) {
    ordered_json row_rel = ordered_json::array();
    ordered_json row_a = ordered_json::array();
    ordered_json row_b = ordered_json::array();
    for (std::size_t ci = 0; ci < cols; ++ci) {
      row_rel.push_back(finite_or_string(plane.at(ri, ci)));
      row_a.push_back(finite_or_string(plane.cost_a[ri * cols + ci]));
      row_b.push_back(finite_or_string(plane.cost_b[ri * cols + ci]));
    }
    rel.push_back(std::move(row_rel));
    ca.push_back(std::move(row_a));
    cb.push_back(std::move(row_b));
  }
  ordered_json j{{"model_a", plane.model_a},
                 {"model_b", plane.model_b},
                 {"cost_ratios", plane.cost_ratios},
                 {"abstention_rates", plane.abstention_rates},
                 {"relative_cost", std::move(rel)},
                 {"cost_a", std::move(ca)},
                 {"cost_b", std::move(cb)}};
  std::filesystem::path json_path = out_dir / (stem + ".costplane.json");
  write_text_atomic(json_path, j.dump(2) + "\n");
  written.push_back(json_path);

  std::filesystem::path svg_path = out_dir / (stem + ".costplane.svg");
  write_text_atomic(svg_path, costplane_svg(plane, plane.model_a + " / " + plane.model_b));
  written.push_back(svg_path);
  return written;
}

std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& out_dir,
                                               bool csv_format) {
  std::vector<std::filesystem::path> written;
  if (csv_format) {
    std::filesystem::path p = out_dir / "report.csv";
    write_text_atomic(p, report_to_csv(report));
    written.push_back(p);
  } else {
    std::filesystem::path p = out_dir / "report.json";
    write_text_atomic(p, report_to_json(report));
    written.push_back(p);
  }
  for (const EntryResult& res : report.entries) {
    if (!res.ok) continue;
    auto files = emit_plot_data(res.reliability, res.reliability_ref, out_dir);
    written.insert(written.end(), files.begin(), files.end());
  }
  return written;
}

}  // namespace calib
