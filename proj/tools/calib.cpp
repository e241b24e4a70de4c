// calib: command-line front end for the calibration library.
//
// Subcommands: evaluate, recalibrate, bias-study, cost-plane, fit-powerlaw,
// reliability, synth. Errors go to stderr as one JSON object per failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "calib/analysis.hpp"
#include "calib/biaslab.hpp"
#include "calib/decision.hpp"
#include "calib/harness.hpp"
#include "calib/io.hpp"
#include "calib/metrics.hpp"
#include "calib/recal.hpp"
#include "calib/synth.hpp"

namespace fs = std::filesystem;
using calib::CalibError;
using ordered_json = nlohmann::ordered_json;

namespace {

struct GlobalOpts {
  std::string out_dir = ".";
  std::string format = "json";  // json | csv
  std::uint64_t seed = 0;
  bool csv() const { return format == "csv"; }
};

std::string read_whole_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CalibError(calib::errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

calib::PredictionFormat format_in_from(const std::string& s) {
  if (s == "csv_logits") return calib::PredictionFormat::csv_logits;
  if (s == "csv_probs") return calib::PredictionFormat::csv_probs;
  throw CalibError(calib::errc::invalid_argument, "unknown input format '" + s + "'");
}

// Generator spec JSON, shared by `synth` and `bias-study --gen`. Schema in
// the README; unknown keys are ignored, missing keys keep their defaults.
calib::GeneratorSpec genspec_from_json(const ordered_json& j, std::uint64_t default_seed) {
  calib::GeneratorSpec spec;
  spec.seed = default_seed;
  try {
    if (j.contains("law")) {
      const ordered_json& law = j.at("law");
      const std::string kind = law.value("kind", std::string{"uniform"});
      if (kind == "uniform") {
        spec.law = calib::ConfidenceLaw::uniform_law(law.value("lo", 0.5), law.value("hi", 1.0));
      } else if (kind == "beta") {
        spec.law = calib::ConfidenceLaw::beta_law(law.value("alpha", 2.0), law.value("beta", 2.0));
      } else if (kind == "point") {
        spec.law = calib::ConfidenceLaw::point_law(law.value("value", 0.75));
      } else {
        throw CalibError(calib::errc::parse_error, "unknown confidence law '" + kind + "'");
      }
    }
    if (j.contains("k")) spec.k = j.at("k").get<std::size_t>();
    if (j.contains("allocation")) {
      const std::string alloc = j.at("allocation").get<std::string>();
      if (alloc == "uniform") spec.allocation = calib::MassAllocation::uniform;
      else if (alloc == "geometric") spec.allocation = calib::MassAllocation::geometric;
      else throw CalibError(calib::errc::parse_error, "unknown allocation '" + alloc + "'");
    }
    if (j.contains("geometric_decay")) spec.geometric_decay = j.at("geometric_decay").get<double>();
    if (j.contains("mode")) {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode == "exact") spec.mode = calib::CalibrationMode::exact;
      else if (mode == "distorted") spec.mode = calib::CalibrationMode::distorted;
      else throw CalibError(calib::errc::parse_error, "unknown mode '" + mode + "'");
    }
    if (j.contains("true_temperature")) {
      spec.true_temperature = j.at("true_temperature").get<double>();
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const ordered_json::exception& e) {
    throw CalibError(calib::errc::parse_error, std::string("generator spec: ") + e.what());
  }
  return spec;
}

ordered_json parse_json_file(const fs::path& path) {
  try {
    return ordered_json::parse(read_whole_file(path));
  } catch (const ordered_json::parse_error& e) {
    throw CalibError(calib::errc::parse_error, path.string() + ": " + e.what());
  }
}

void write_output(const fs::path& path, const std::string& content) {
  calib::write_text_atomic(path, content);
  std::cout << "wrote " << path.string() << "\n";
}

// ---- subcommands -----------------------------------------------------------

int cmd_evaluate(const GlobalOpts& g, const std::string& manifest_path) {
  calib::Manifest manifest = calib::load_manifest(manifest_path);
  calib::Report report = calib::run_evaluate(manifest);
  for (const fs::path& p : calib::emit_report(report, g.out_dir, g.csv())) {
    std::cout << "wrote " << p.string() << "\n";
  }
  std::size_t ok = 0;
  for (const calib::EntryResult& res : report.entries) {
    if (res.ok) {
      ++ok;
    } else {
      std::cerr << ordered_json{{"error",
                                 {{"code", "entry_failed"},
                                  {"model", res.model_name},
                                  {"dataset", res.dataset_name},
                                  {"message", res.error}}}}
                       .dump()
                << "\n";
    }
  }
  std::cout << ok << "/" << report.entries.size() << " entries evaluated\n";
  return 0;
}

int cmd_recalibrate(const GlobalOpts& g, const std::string& preds_path, double fraction,
                    const std::string& format_in) {
  calib::PredictionSet preds =
      calib::load_predictions(preds_path, format_in_from(format_in));
  auto [fit_set, eval_set] = calib::split_holdout(preds, fraction, g.seed);
  calib::Temperature t = calib::fit_temperature(fit_set);
  calib::PredictionSet scaled_eval = calib::apply_temperature(eval_set, t.value);

  calib::EceConfig ece_cfg;
  const double ece_before = calib::ece(eval_set, ece_cfg);
  const double ece_after = calib::ece(scaled_eval, ece_cfg);
  const double nll_before = calib::nll(calib::probabilities_of(eval_set));
  const double nll_after = calib::nll(scaled_eval);

  calib::PredictionSet scaled_all = calib::apply_temperature(preds, t.value);
  const std::string stem = fs::path(preds_path).stem().string();
  const fs::path scaled_path = fs::path(g.out_dir) / (stem + ".scaled.csv");
  calib::write_predictions(scaled_all, scaled_path);
  std::cout << "wrote " << scaled_path.string() << "\n";

  if (g.csv()) {
    std::string csv = "key,value\n";
    csv += "temperature," + calib::format_double(t.value) + "\n";
    csv += "final_nll," + calib::format_double(t.final_nll) + "\n";
    csv += "hit_boundary," + std::string(t.hit_boundary ? "1" : "0") + "\n";
    csv += "n_fit," + std::to_string(fit_set.n) + "\n";
    csv += "n_eval," + std::to_string(eval_set.n) + "\n";
    csv += "seed," + std::to_string(g.seed) + "\n";
    csv += "ece_eval_unscaled," + calib::format_double(ece_before) + "\n";
    csv += "ece_eval_scaled," + calib::format_double(ece_after) + "\n";
    csv += "nll_eval_unscaled," + calib::format_double(nll_before) + "\n";
    csv += "nll_eval_scaled," + calib::format_double(nll_after) + "\n";
    write_output(fs::path(g.out_dir) / "recalibration.csv", csv);
  } else {
    ordered_json j{{"model", preds.model_name},
                   {"temperature",
                    {{"value", t.value},
                     {"final_nll", t.final_nll},
                     {"iterations", t.iterations},
                     {"hit_boundary", t.hit_boundary}}},
                   {"fraction", fraction},
                   {"seed", g.seed},
                   {"n_fit", fit_set.n},
                   {"n_eval", eval_set.n},
                   {"eval_metrics",
                    {{"ece_unscaled", ece_before},
                     {"ece_scaled", ece_after},
                     {"nll_unscaled", nll_before},
                     {"nll_scaled", nll_after}}},
                   {"scaled_predictions", scaled_path.string()},
                   {"scaled_format", "csv_probs"}};
    write_output(fs::path(g.out_dir) / "recalibration.json", j.dump(2) + "\n");
  }
  std::cout << "fitted temperature " << calib::format_double(t.value)
            << (t.hit_boundary ? " (search boundary)" : "") << "\n";
  return 0;
}

int cmd_bias_study(const GlobalOpts& g, const std::vector<std::size_t>& bins, std::size_t n,
                   std::size_t trials, const std::string& gen_path) {
  calib::GeneratorSpec spec;
  if (!gen_path.empty()) {
    spec = genspec_from_json(parse_json_file(gen_path), g.seed);
  } else {
    spec.law = calib::ConfidenceLaw::uniform_law(0.5, 1.0);
    spec.k = 2;
    spec.seed = g.seed;
  }
  calib::BinCountStudy study = calib::bias_vs_bins_study(spec, n, bins, trials, g.seed);

  if (g.csv()) {
    std::string csv = "num_bins,mean,std_error\n";
    for (const calib::BinCountStudyRow& row : study.rows) {
      csv += std::to_string(row.num_bins) + ',' + calib::format_double(row.mean) + ',' +
             calib::format_double(row.std_error) + '\n';
    }
    write_output(fs::path(g.out_dir) / "bias_study.csv", csv);
  } else {
    ordered_json rows = ordered_json::array();
    for (const calib::BinCountStudyRow& row : study.rows) {
      rows.push_back(ordered_json{
          {"num_bins", row.num_bins}, {"mean", row.mean}, {"std_error", row.std_error}});
    }
    ordered_json j{{"generator", study.generator},
                   {"n", study.n},
                   {"trials", study.trials},
                   {"seed", g.seed},
                   {"true_value", 0.0},
                   {"rows", std::move(rows)}};
    write_output(fs::path(g.out_dir) / "bias_study.json", j.dump(2) + "\n");
  }
  for (const calib::BinCountStudyRow& row : study.rows) {
    std::cout << row.num_bins << " bins: mean " << calib::format_double(row.mean) << " +- "
              << calib::format_double(row.std_error) << "\n";
  }
  return 0;
}

int cmd_cost_plane(const GlobalOpts& g, const std::string& path_a, const std::string& path_b,
                   std::vector<double> rates, std::vector<double> ratios,
                   const std::string& format_in) {
  const calib::PredictionFormat fmt = format_in_from(format_in);
  calib::PredictionSet a = calib::load_predictions(path_a, fmt);
  calib::PredictionSet b = calib::load_predictions(path_b, fmt);
  calib::CostPlane plane =
      calib::cost_plane(calib::top_label_view(a), calib::top_label_view(b), std::move(ratios),
                        std::move(rates), a.model_name, b.model_name);
  const std::string stem = a.model_name + "_vs_" + b.model_name;
  for (const fs::path& p : calib::emit_plot_data(plane, stem, g.out_dir)) {
    std::cout << "wrote " << p.string() << "\n";
  }
  return 0;
}

int cmd_fit_powerlaw(const GlobalOpts& g, const std::string& points_path, std::size_t resamples) {
  const std::string text = read_whole_file(points_path);
  std::vector<double> x, y;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;  // header row
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw CalibError(calib::errc::parse_error,
                       points_path + " line " + std::to_string(lineno) + ": expected x,y");
    }
    try {
      x.push_back(std::stod(line.substr(0, comma)));
      y.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw CalibError(calib::errc::parse_error,
                       points_path + " line " + std::to_string(lineno) + ": bad number");
    }
  }
  calib::PowerLawFit fit = calib::fit_power_law(x, y, resamples, g.seed);

  if (g.csv()) {
    std::string csv = "a,k,a_lo,a_hi,k_lo,k_hi,resamples,seed\n";
    csv += calib::format_double(fit.a) + ',' + calib::format_double(fit.k) + ',' +
           calib::format_double(fit.a_lo) + ',' + calib::format_double(fit.a_hi) + ',' +
           calib::format_double(fit.k_lo) + ',' + calib::format_double(fit.k_hi) + ',' +
           std::to_string(fit.resamples) + ',' + std::to_string(fit.seed) + '\n';
    write_output(fs::path(g.out_dir) / "powerlaw.csv", csv);
  } else {
    ordered_json j{{"a", fit.a},
                   {"k", fit.k},
                   {"a_ci", {fit.a_lo, fit.a_hi}},
                   {"k_ci", {fit.k_lo, fit.k_hi}},
                   {"resamples", fit.resamples},
                   {"seed", fit.seed},
                   {"points", x.size()}};
    write_output(fs::path(g.out_dir) / "powerlaw.json", j.dump(2) + "\n");
  }
  std::cout << "y = " << calib::format_double(fit.a) << " * x^" << calib::format_double(fit.k)
            << "\n";
  return 0;
}

int cmd_reliability(const GlobalOpts& g, const std::string& preds_path, std::size_t bins,
                    const std::string& scheme, std::size_t hist_bins,
                    const std::string& format_in) {
  calib::PredictionSet preds = calib::load_predictions(preds_path, format_in_from(format_in));
  calib::BinningSpec spec;
  spec.num_bins = bins;
  if (scheme == "equal_mass") spec.scheme = calib::BinningScheme::equal_mass;
  else if (scheme == "equal_width") spec.scheme = calib::BinningScheme::equal_width;
  else throw CalibError(calib::errc::invalid_argument, "unknown scheme '" + scheme + "'");
  calib::ReliabilityData data = calib::reliability_data(preds, spec, hist_bins);
  for (const fs::path& p : calib::emit_plot_data(data, preds.model_name, g.out_dir)) {
    std::cout << "wrote " << p.string() << "\n";
  }
  return 0;
}

int cmd_synth(const GlobalOpts& g, const std::string& spec_path) {
  ordered_json j = parse_json_file(spec_path);
  calib::GeneratorSpec spec = genspec_from_json(j, g.seed);
  std::size_t n = 1000;
  std::string name = fs::path(spec_path).stem().string();
  try {
    if (j.contains("n")) n = j.at("n").get<std::size_t>();
    if (j.contains("name")) name = j.at("name").get<std::string>();
  } catch (const ordered_json::exception& e) {
    throw CalibError(calib::errc::parse_error, std::string("generator spec: ") + e.what());
  }
  calib::PredictionSet preds = calib::generate(spec, n);
  const fs::path out = fs::path(g.out_dir) / (name + ".csv");
  calib::write_predictions(preds, out);
  std::cout << "wrote " << out.string() << "\n";
  std::cout << calib::describe(spec) << ", n=" << n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calibration measurement toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out-dir", g.out_dir, "output directory (env: CALIB_OUT_DIR)")
      ->envname("CALIB_OUT_DIR")
      ->capture_default_str();
  app.add_option("--format", g.format, "output format for tabular results")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--seed", g.seed, "seed for subcommands that draw or resample")
      ->capture_default_str();

  std::string manifest_path;
  CLI::App* evaluate = app.add_subcommand("evaluate", "run the evaluation protocol on a manifest");
  evaluate->add_option("manifest", manifest_path, "manifest JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->fallthrough();

  std::string recal_preds;
  double recal_fraction = 0.2;
  std::string recal_format_in = "csv_logits";
  CLI::App* recalibrate =
      app.add_subcommand("recalibrate", "fit a temperature on a holdout split and apply it");
  recalibrate->add_option("preds", recal_preds, "prediction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  recalibrate->add_option("--fraction", recal_fraction, "fraction used to fit")
      ->capture_default_str();
  recalibrate->add_option("--format-in", recal_format_in, "input score format")
      ->check(CLI::IsMember({"csv_logits", "csv_probs"}))
      ->capture_default_str();
  recalibrate->fallthrough();

  std::vector<std::size_t> study_bins{10, 100, 1000};
  std::size_t study_n = 10000;
  std::size_t study_trials = 200;
  std::string study_gen;
  CLI::App* bias_study =
      app.add_subcommand("bias-study", "estimator value vs bin count on a calibrated generator");
  bias_study->add_option("--bins", study_bins, "bin counts")->delimiter(',')->capture_default_str();
  bias_study->add_option("--n", study_n, "examples per trial")->capture_default_str();
  bias_study->add_option("--trials", study_trials, "Monte Carlo trials")->capture_default_str();
  bias_study->add_option("--gen", study_gen, "generator spec JSON (default: uniform[0.5,1), k=2)")
      ->check(CLI::ExistingFile);
  bias_study->fallthrough();

  std::string plane_a, plane_b;
  std::vector<double> plane_rates{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> plane_ratios{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  std::string plane_format_in = "csv_logits";
  CLI::App* cost_plane_cmd =
      app.add_subcommand("cost-plane", "relative selective-prediction cost of two models");
  cost_plane_cmd->add_option("predsA", plane_a, "first model's prediction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cost_plane_cmd->add_option("predsB", plane_b, "second model's prediction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cost_plane_cmd->add_option("--rates", plane_rates, "abstention rate grid")
      ->delimiter(',')
      ->capture_default_str();
  cost_plane_cmd->add_option("--ratios", plane_ratios, "abstention cost ratio grid")
      ->delimiter(',')
      ->capture_default_str();
  cost_plane_cmd->add_option("--format-in", plane_format_in, "input score format")
      ->check(CLI::IsMember({"csv_logits", "csv_probs"}))
      ->capture_default_str();
  cost_plane_cmd->fallthrough();

  std::string powerlaw_points;
  std::size_t powerlaw_resamples = 2000;
  CLI::App* fit_powerlaw_cmd =
      app.add_subcommand("fit-powerlaw", "fit y = a * x^k with bootstrap intervals");
  fit_powerlaw_cmd->add_option("points", powerlaw_points, "CSV with header and x,y rows")
      ->required()
      ->check(CLI::ExistingFile);
  fit_powerlaw_cmd->add_option("--resamples", powerlaw_resamples, "bootstrap resamples")
      ->capture_default_str();
  fit_powerlaw_cmd->fallthrough();

  std::string rel_preds;
  std::size_t rel_bins = 15;
  std::string rel_scheme = "equal_mass";
  std::size_t rel_hist_bins = 20;
  std::string rel_format_in = "csv_logits";
  CLI::App* reliability_cmd =
      app.add_subcommand("reliability", "reliability diagram data and SVG for one model");
  reliability_cmd->add_option("preds", rel_preds, "prediction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  reliability_cmd->add_option("--bins", rel_bins, "diagram bins")->capture_default_str();
  reliability_cmd->add_option("--scheme", rel_scheme, "binning scheme")
      ->check(CLI::IsMember({"equal_mass", "equal_width"}))
      ->capture_default_str();
  reliability_cmd->add_option("--hist-bins", rel_hist_bins, "confidence histogram cells")
      ->capture_default_str();
  reliability_cmd->add_option("--format-in", rel_format_in, "input score format")
      ->check(CLI::IsMember({"csv_logits", "csv_probs"}))
      ->capture_default_str();
  reliability_cmd->fallthrough();

  std::string synth_spec;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "draw a synthetic prediction set and write it as CSV");
  synth_cmd->add_option("spec", synth_spec, "generator spec JSON")
      ->required()
      ->check(CLI::ExistingFile);
  synth_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << ordered_json{{"error", {{"code", "invalid_argument"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }

  try {
    if (*evaluate) return cmd_evaluate(g, manifest_path);
    if (*recalibrate) return cmd_recalibrate(g, recal_preds, recal_fraction, recal_format_in);
    if (*bias_study) return cmd_bias_study(g, study_bins, study_n, study_trials, study_gen);
    if (*cost_plane_cmd) {
      return cmd_cost_plane(g, plane_a, plane_b, plane_rates, plane_ratios, plane_format_in);
    }
    if (*fit_powerlaw_cmd) return cmd_fit_powerlaw(g, powerlaw_points, powerlaw_resamples);
    if (*reliability_cmd) {
      return cmd_reliability(g, rel_preds, rel_bins, rel_scheme, rel_hist_bins, rel_format_in);
    }
    if (*synth_cmd) return cmd_synth(g, synth_spec);
  } catch (const CalibError& e) {
    std::cerr << ordered_json{{"error", {{"code", calib::errc_name(e.code())}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 2;
  }
  return 0;
}
