// Command-line driver: experiment grid, standalone scoring and dataset export.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vbll/calib_metrics.hpp"
#include "vbll/error.hpp"
#include "vbll/experiment.hpp"
#include "vbll/kernels.hpp"
#include "vbll/log.hpp"
#include "vbll/reliability_svg.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

vbll::EceWeighting parse_weighting(const std::string& text) {
  if (text == "mass") return vbll::EceWeighting::mass_weighted;
  if (text == "binmean") return vbll::EceWeighting::bin_mean;
  throw vbll::InvalidArgument("--ece-weighting must be mass or binmean");
}

struct RunOptions {
  std::string dataset;
  std::string features = "raw";
  std::string configs = "C1,C2,C3,C4,C5";
  std::vector<std::string> custom;
  std::string baseline = "map";
  std::uint64_t seed = 42;
  std::string out;
  std::string weighting = "mass";
  std::size_t bins = vbll::kDefaultBins;
  double train_fraction = 0.7;
  unsigned threads = 0;
  unsigned train_samples = 4;
  unsigned eval_samples = 100;
  std::string data_dir;
  bool no_models = false;
};

int cmd_run(const RunOptions& o) {
  vbll::ExperimentManifest m;
  m.datasets = split_list(o.dataset);
  m.features.clear();
  for (const auto& f : split_list(o.features)) m.features.push_back(vbll::parse_feature_spec(f));
  m.baselines.clear();
  for (const auto& b : split_list(o.baseline)) m.baselines.push_back(vbll::parse_baseline_spec(b));
  for (const auto& c : split_list(o.configs)) {
    if (c == "none") continue;
    const auto p = vbll::parse_preset(c);
    if (!p) throw vbll::InvalidArgument("unknown config preset '" + c + "' (C1..C5)");
    m.configs.push_back(vbll::preset(*p));
  }
  for (const auto& text : o.custom) {
    auto cfg = vbll::config_from_text(text);
    if (!vbll::within_search_space(cfg)) {
      vbll::log::warn("config " + cfg.id + " lies outside the init_logvar/weight_mu_coef search space");
    }
    m.configs.push_back(cfg);
  }
  for (auto& c : m.configs) {
    c.train_samples = o.train_samples;
    c.eval_samples = o.eval_samples;
  }
  m.seed = o.seed;
  m.train_fraction = o.train_fraction;
  m.n_bins = o.bins;
  m.weighting = parse_weighting(o.weighting);
  m.output_dir = o.out;
  m.data_dir = o.data_dir;
  m.threads = o.threads;
  m.write_models = !o.no_models;

  const auto outcome = vbll::run_grid(m);
  for (const auto& t : outcome.tables) std::cout << vbll::format_table(t) << '\n';
  std::cout << "wrote results to " << m.output_dir.string() << '\n';
  return 0;
}

struct MetricsOptions {
  std::string probs;
  std::string labels;
  std::size_t bins = vbll::kDefaultBins;
  std::string weighting = "mass";
  std::string reliability_csv;
  std::string reliability_svg;
};

int cmd_metrics(const MetricsOptions& o) {
  const auto probs = vbll::load_probability_csv(o.probs);
  const auto labels = vbll::load_label_csv(o.labels);
  vbll::PredictionSet pred;
  for (const auto& [id, p] : probs) {
    const auto it = labels.find(id);
    if (it == labels.end()) {
      throw vbll::FormatError("label file has no row_id " + std::to_string(id));
    }
    pred.p_pos.push_back(p);
    pred.y.push_back(it->second);
  }
  const auto report = vbll::evaluate_predictions(pred, o.bins, parse_weighting(o.weighting));
  std::cout << vbll::metrics_csv_header(true) << '\n'
            << vbll::metrics_csv_row("scored", report, true) << '\n';
  if (!o.reliability_csv.empty() || !o.reliability_svg.empty()) {
    const auto bins = vbll::reliability_bins(pred, o.bins);
    if (!o.reliability_csv.empty()) vbll::write_reliability_csv(bins, o.reliability_csv);
    if (!o.reliability_svg.empty()) vbll::emit_reliability_svg(bins, o.reliability_svg, "scored");
  }
  return 0;
}

int cmd_export_clean(const std::string& dataset, const std::string& out,
                     const std::string& data_dir) {
  const auto ds = vbll::resolve_dataset(dataset, data_dir);
  vbll::write_clean_csv(ds, out);
  std::cout << "wrote " << ds.size() << " rows x " << ds.dim() << " features to " << out << '\n';
  return 0;
}

int cmd_export_split(const std::string& dataset, std::uint64_t seed, double fraction,
                     const std::string& out, const std::string& data_dir) {
  const auto ds = vbll::resolve_dataset(dataset, data_dir);
  const auto split = vbll::stratified_split(ds, fraction, seed);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw vbll::FormatError("cannot write " + out);
  f << "row_id,label,set\n";
  for (auto i : split.train) f << ds.row_ids[i] << ',' << ds.y[i] << ",train\n";
  for (auto i : split.val) f << ds.row_ids[i] << ',' << ds.y[i] << ",val\n";
  std::cout << "wrote " << split.train.size() << " train / " << split.val.size()
            << " validation rows to " << out << '\n';
  return 0;
}

int cmd_export_embeddings(const std::string& dataset, const std::string& features,
                          std::uint64_t seed, double fraction, const std::string& out,
                          const std::string& data_dir) {
  const auto spec = vbll::parse_feature_spec(features);
  if (spec.kind == vbll::FeatureKind::external) {
    throw vbll::InvalidArgument("export-embeddings takes raw or proj:K features");
  }
  const auto data = vbll::prepare_data(dataset, spec, seed, fraction, data_dir);
  if (std::filesystem::path(out).extension() == ".csv") {
    vbll::save_embeddings_csv(data.embeddings, out);
  } else {
    vbll::save_embeddings(data.embeddings, out);
  }
  std::cout << "wrote " << data.embeddings.size() << " x " << data.embeddings.dim()
            << " embeddings to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational Bayesian last-layer calibration experiments"};
  app.require_subcommand(1);
  bool verbose = false;
  std::string kernel_backend;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");
  app.add_option("--kernels", kernel_backend, "Force kernel backend (scalar, avx2, neon)");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Train and score baseline + configurations");
  run_cmd->add_option("--dataset", run.dataset, "Dataset name(s) or CSV path(s), comma-separated")
      ->required();
  run_cmd->add_option("--features", run.features, "raw | proj:K | file:PATH (per dataset, comma-separated)");
  run_cmd->add_option("--configs", run.configs, "Preset list, e.g. C1,C2 (or none)");
  run_cmd->add_option("--custom", run.custom,
                      "Extra config as key=value pairs separated by ';' (repeatable)");
  run_cmd->add_option("--baseline", run.baseline, "map | probs:PATH | none (per dataset)");
  run_cmd->add_option("--seed", run.seed, "Split/projection/training seed");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--ece-weighting", run.weighting, "mass | binmean");
  run_cmd->add_option("--bins", run.bins, "Reliability/ECE bin count");
  run_cmd->add_option("--train-fraction", run.train_fraction, "Training split fraction");
  run_cmd->add_option("--threads", run.threads, "Worker threads for configurations (0 = auto)");
  run_cmd->add_option("--train-samples", run.train_samples, "Weight samples per training step");
  run_cmd->add_option("--eval-samples", run.eval_samples, "Weight samples for the predictive");
  run_cmd->add_option("--data-dir", run.data_dir, "Directory holding the dataset CSVs");
  run_cmd->add_flag("--no-models", run.no_models, "Skip writing model files");

  MetricsOptions metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Score a row_id,p_pos prediction file");
  metrics_cmd->add_option("--probs", metrics.probs, "CSV row_id,p_pos")->required();
  metrics_cmd->add_option("--labels", metrics.labels, "CSV with row_id and label columns")
      ->required();
  metrics_cmd->add_option("--bins", metrics.bins, "ECE bin count");
  metrics_cmd->add_option("--ece-weighting", metrics.weighting, "mass | binmean");
  metrics_cmd->add_option("--reliability-csv", metrics.reliability_csv, "Write bin table");
  metrics_cmd->add_option("--reliability-svg", metrics.reliability_svg, "Write diagram");

  std::string clean_dataset, clean_out, clean_dir;
  auto* clean_cmd = app.add_subcommand("export-clean", "Write the cleaned dataset as CSV");
  clean_cmd->add_option("--dataset", clean_dataset, "Dataset name or path")->required();
  clean_cmd->add_option("--out", clean_out, "Output CSV")->required();
  clean_cmd->add_option("--data-dir", clean_dir, "Directory holding the dataset CSVs");

  std::string split_dataset, split_out, split_dir;
  std::uint64_t split_seed = 42;
  double split_fraction = 0.7;
  auto* split_cmd = app.add_subcommand("export-split", "Write row_id,label,set for a split");
  split_cmd->add_option("--dataset", split_dataset, "Dataset name or path")->required();
  split_cmd->add_option("--out", split_out, "Output CSV")->required();
  split_cmd->add_option("--seed", split_seed, "Split seed");
  split_cmd->add_option("--train-fraction", split_fraction, "Training split fraction");
  split_cmd->add_option("--data-dir", split_dir, "Directory holding the dataset CSVs");

  std::string emb_dataset, emb_features = "raw", emb_out, emb_dir;
  std::uint64_t emb_seed = 42;
  double emb_fraction = 0.7;
  auto* emb_cmd = app.add_subcommand("export-embeddings",
                                     "Write raw or projected features as an embedding file");
  emb_cmd->add_option("--dataset", emb_dataset, "Dataset name or path")->required();
  emb_cmd->add_option("--features", emb_features, "raw | proj:K");
  emb_cmd->add_option("--out", emb_out, "Output .vble (or .csv)")->required();
  emb_cmd->add_option("--seed", emb_seed, "Split/projection seed");
  emb_cmd->add_option("--train-fraction", emb_fraction, "Fraction used to fit the scaler");
  emb_cmd->add_option("--data-dir", emb_dir, "Directory holding the dataset CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    vbll::log::set_level(verbose ? vbll::log::Level::info : vbll::log::Level::warn);
    if (!kernel_backend.empty() && !vbll::kernels::select(kernel_backend)) {
      throw vbll::InvalidArgument("kernel backend '" + kernel_backend + "' is unavailable");
    }
    if (*run_cmd) return cmd_run(run);
    if (*metrics_cmd) return cmd_metrics(metrics);
    if (*clean_cmd) return cmd_export_clean(clean_dataset, clean_out, clean_dir);
    if (*split_cmd) {
      return cmd_export_split(split_dataset, split_seed, split_fraction, split_out, split_dir);
    }
    if (*emb_cmd) {
      return cmd_export_embeddings(emb_dataset, emb_features, emb_seed, emb_fraction, emb_out,
                                   emb_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
