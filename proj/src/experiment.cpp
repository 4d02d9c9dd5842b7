#include "vbll/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "csv_util.hpp"
#include "vbll/error.hpp"
#include "vbll/log.hpp"
#include "vbll/model_io.hpp"
#include "vbll/reliability_svg.hpp"

namespace vbll {

FeatureSpec parse_feature_spec(const std::string& text) {
  FeatureSpec spec;
  if (text == "raw") return spec;
  if (text.rfind("proj:", 0) == 0) {
    const auto k = csv::parse_int(std::string_view(text).substr(5));
    if (!k || *k < 1) throw InvalidArgument("bad projection dimension in '" + text + "'");
    spec.kind = FeatureKind::random_projection;
    spec.projection_dim = static_cast<std::size_t>(*k);
    return spec;
  }
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    spec.kind = FeatureKind::external;
    spec.file = text.substr(5);
    return spec;
  }
  throw InvalidArgument("unknown feature source '" + text + "' (raw, proj:K, file:PATH)");
}

BaselineSpec parse_baseline_spec(const std::string& text) {
  if (text == "map") return {BaselineMode::builtin_map, {}};
  if (text == "none") return {BaselineMode::none, {}};
  if (text.rfind("probs:", 0) == 0 && text.size() > 6) {
    return {BaselineMode::external_probs, text.substr(6)};
  }
  throw InvalidArgument("unknown baseline '" + text + "' (map, none, probs:PATH)");
}

void validate(const ExperimentManifest& m) {
  if (m.datasets.empty()) throw InvalidArgument("manifest names no dataset");
  const bool any_baseline =
      std::any_of(m.baselines.begin(), m.baselines.end(),
                  [](const BaselineSpec& b) { return b.mode != BaselineMode::none; });
  if (m.configs.empty() && !any_baseline) {
    throw InvalidArgument("manifest requests neither a configuration nor a baseline");
  }
  auto per_dataset = [&](std::size_t n, const char* what) {
    if (n != 1 && n != m.datasets.size()) {
      throw InvalidArgument(std::string("give one ") + what + " for all datasets or one each");
    }
  };
  per_dataset(m.features.size(), "feature source");
  per_dataset(m.baselines.size(), "baseline");
  if (m.n_bins == 0) throw InvalidArgument("n_bins must be >= 1");
  for (const auto& c : m.configs) {
    if (c.id.empty() || c.id == "Baseline") {
      throw InvalidArgument("configuration ids must be non-empty and not 'Baseline'");
    }
  }
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("VBLL_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "data";
}

namespace {

std::vector<std::string> candidate_files(DatasetName name) {
  switch (name) {
    case DatasetName::breast_cancer: return {"wdbc.csv", "wdbc.data", "breast_cancer.csv"};
    case DatasetName::pima:
      return {"pima.csv", "diabetes.csv", "pima-indians-diabetes.csv",
              "pima-indians-diabetes.data.csv"};
    case DatasetName::heart_cleveland:
      return {"cleveland.csv", "heart_cleveland.csv", "processed.cleveland.data"};
    case DatasetName::custom: break;
  }
  return {};
}

std::string first_line(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TabularDataset resolve_dataset(const std::string& name_or_path,
                               const std::filesystem::path& data_dir) {
  if (const auto schema = schema_by_name(name_or_path)) {
    const auto dir = data_dir.empty() ? default_data_dir() : data_dir;
    for (const auto& file : candidate_files(schema->name)) {
      const auto path = dir / file;
      if (std::filesystem::exists(path)) return load_dataset(path, *schema);
    }
    throw FormatError("no data file for '" + name_or_path + "' in " + dir.string() +
                      " (expected " + candidate_files(schema->name).front() + ")");
  }
  const std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path)) {
    throw FormatError("dataset file not found: " + name_or_path);
  }
  if (first_line(path).rfind("row_id,label", 0) == 0) return load_clean_csv(path);
  std::string errors;
  for (const auto& schema : {breast_cancer_schema(), pima_schema(), heart_cleveland_schema()}) {
    try {
      return load_dataset(path, schema);
    } catch (const FormatError& e) {
      errors += std::string("\n  ") + std::string(to_string(schema.name)) + ": " + e.what();
    }
  }
  throw FormatError("file " + name_or_path + " matches no known dataset schema:" + errors);
}

PreparedData prepare_data(const std::string& dataset, const FeatureSpec& features,
                          std::uint64_t seed, double train_fraction,
                          const std::filesystem::path& data_dir) {
  PreparedData out;
  out.dataset = resolve_dataset(dataset, data_dir);
  out.label = out.dataset.schema.name == DatasetName::custom
                  ? std::filesystem::path(dataset).stem().string()
                  : std::string(to_string(out.dataset.schema.name));
  out.split = stratified_split(out.dataset, train_fraction, seed);
  const Scaler scaler = fit_scaler(out.dataset, out.split.train);
  switch (features.kind) {
    case FeatureKind::raw: out.embeddings = raw_features(out.dataset, scaler); break;
    case FeatureKind::random_projection:
      out.embeddings = random_projection(out.dataset, scaler, features.projection_dim, seed);
      break;
    case FeatureKind::external:
      out.embeddings = align_to_dataset(load_embeddings(features.file), out.dataset);
      break;
  }
  return out;
}

namespace {

PredictionSet positive_column(const Matrix& probs, std::vector<int> labels) {
  PredictionSet pred;
  pred.y = std::move(labels);
  pred.p_pos.reserve(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) pred.p_pos.push_back(probs(i, 1));
  return pred;
}

void score(EvalResult& r, std::size_t n_bins, EceWeighting weighting) {
  r.metrics = evaluate_predictions(r.predictions, n_bins, weighting);
  r.bins = reliability_bins(r.predictions, n_bins);
}

}  // namespace

EvalResult run_config(const PreparedData& data, const TrainConfig& cfg, std::size_t n_bins,
                      EceWeighting weighting) {
  const Matrix E_train = take_rows(data.embeddings.E, data.split.train);
  const Matrix E_val = take_rows(data.embeddings.E, data.split.val);
  const auto y_train = take(data.dataset.y, data.split.train);

  EvalResult r;
  r.id = cfg.id;
  r.config = cfg;
  r.training = train(cfg, E_train, y_train);
  Matrix probs;
  if (cfg.noise == NoiseMode::zero) {
    probs = map_predictive(r.training->params, E_val);
  } else {
    if (cfg.eval_samples == 0) throw InvalidArgument("eval_samples must be >= 1");
    Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
    probs = predictive_probs(r.training->params, E_val, cfg.eval_samples, rng);
  }
  r.predictions = positive_column(probs, take(data.dataset.y, data.split.val));
  score(r, n_bins, weighting);
  return r;
}

EvalResult run_baseline_builtin(const PreparedData& data, std::uint64_t seed,
                                std::size_t n_bins, EceWeighting weighting) {
  return run_config(data, map_baseline_config(seed), n_bins, weighting);
}

EvalResult run_baseline_external(const PreparedData& data,
                                 const std::map<std::size_t, double>& probs,
                                 std::size_t n_bins, EceWeighting weighting) {
  EvalResult r;
  r.id = "Baseline";
  for (auto i : data.split.val) {
    const auto id = data.dataset.row_ids[i];
    const auto it = probs.find(id);
    if (it == probs.end()) {
      throw FormatError("baseline probability file has no row_id " + std::to_string(id));
    }
    r.predictions.p_pos.push_back(it->second);
    r.predictions.y.push_back(data.dataset.y[i]);
  }
  score(r, n_bins, weighting);
  return r;
}

std::map<std::size_t, double> load_probability_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open probability file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty probability file: " + path.string());
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "row_id" || header[1] != "p_pos") {
    throw FormatError("header mismatch in " + path.string() + ": expected row_id,p_pos");
  }
  std::map<std::size_t, double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() < 2) throw FormatError(where + ": expected row_id,p_pos");
    const auto id = csv::parse_int(f[0]);
    const auto p = csv::parse_double(f[1]);
    if (!id || *id < 0) throw FormatError(where + ": bad row_id");
    if (!p || !(*p >= 0.0 && *p <= 1.0)) throw FormatError(where + ": p_pos outside [0,1]");
    if (!out.emplace(static_cast<std::size_t>(*id), *p).second) {
      throw FormatError(where + ": duplicate row_id " + f[0]);
    }
  }
  return out;
}

void write_probability_csv(const std::vector<std::size_t>& row_ids,
                           const std::vector<double>& p_pos,
                           const std::filesystem::path& path) {
  if (row_ids.size() != p_pos.size()) throw InvalidArgument("row ids and probabilities differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "row_id,p_pos\n";
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    out << row_ids[i] << ',' << csv::exact(p_pos[i]) << '\n';
  }
}

std::map<std::size_t, int> load_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty label file: " + path.string());
  const auto header = csv::split(line);
  const auto id_col = std::find(header.begin(), header.end(), "row_id") - header.begin();
  const auto label_col = std::find(header.begin(), header.end(), "label") - header.begin();
  if (id_col == static_cast<long>(header.size()) ||
      label_col == static_cast<long>(header.size())) {
    throw FormatError("label file " + path.string() + " needs row_id and label columns");
  }
  std::map<std::size_t, int> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw FormatError(where + ": wrong field count");
    const auto id = csv::parse_int(f[id_col]);
    const auto label = csv::parse_int(f[label_col]);
    if (!id || *id < 0) throw FormatError(where + ": bad row_id");
    if (!label || (*label != 0 && *label != 1)) throw FormatError(where + ": bad label");
    out[static_cast<std::size_t>(*id)] = static_cast<int>(*label);
  }
  return out;
}

namespace {

struct Reference {
  double acc, f1, auc, nll, brier, ece;
};

// Published baseline rows obtained with the pretrained model's own probabilities.
std::optional<Reference> reference_baseline(DatasetName name) {
  switch (name) {
    case DatasetName::breast_cancer: return Reference{0.982, 0.986, 0.997, 0.054, 0.015, 0.189};
    case DatasetName::pima: return Reference{0.753, 0.632, 0.808, 0.516, 0.171, 0.072};
    case DatasetName::heart_cleveland:
      return Reference{0.846, 0.863, 0.909, 0.390, 0.114, 0.220};
    case DatasetName::custom: break;
  }
  return std::nullopt;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string format_table(const ResultsTable& table) {
  std::ostringstream out;
  char buf[160];
  out << "Dataset: " << table.dataset << "  (train " << table.n_train << ", validation "
      << table.n_val << ")\n";
  std::snprintf(buf, sizeof buf, "%-10s %7s %7s %7s %7s %7s %7s\n", "Config", "Acc", "F1", "AUC",
                "NLL", "Brier", "ECE");
  out << buf;
  for (const auto& r : table.rows) {
    const auto& m = r.metrics;
    std::snprintf(buf, sizeof buf, "%-10s %7.3f %7.3f %7.3f %7.3f %7.3f %7.3f\n", r.id.c_str(),
                  m.accuracy, m.f1, m.auc_roc, m.nll, m.brier, m.ece);
    out << buf;
  }
  const bool builtin = std::any_of(table.rows.begin(), table.rows.end(), [](const EvalResult& r) {
    return r.id == "Baseline" && r.training.has_value();
  });
  if (builtin) out << "Baseline here is the built-in softmax-regression stand-in.\n";
  if (const auto name = schema_by_name(table.dataset)) {
    if (const auto ref = reference_baseline(name->name)) {
      std::snprintf(buf, sizeof buf,
                    "reference baseline (pretrained-model probabilities): acc %.3f f1 %.3f "
                    "auc %.3f nll %.3f brier %.3f ece %.3f\n",
                    ref->acc, ref->f1, ref->auc, ref->nll, ref->brier, ref->ece);
      out << buf;
    }
  }
  return out.str();
}

GridOutcome run_grid(const ExperimentManifest& manifest) {
  validate(manifest);
  if (manifest.output_dir.empty()) throw InvalidArgument("manifest has no output directory");
  std::error_code ec;
  std::filesystem::create_directories(manifest.output_dir, ec);
  if (ec || !std::filesystem::is_directory(manifest.output_dir)) {
    throw FormatError("cannot create output directory " + manifest.output_dir.string());
  }

  GridOutcome outcome;
  const bool multi = manifest.datasets.size() > 1;
  for (std::size_t d = 0; d < manifest.datasets.size(); ++d) {
    const auto& features = manifest.features[manifest.features.size() == 1 ? 0 : d];
    const auto& baseline = manifest.baselines[manifest.baselines.size() == 1 ? 0 : d];
    const PreparedData data = prepare_data(manifest.datasets[d], features, manifest.seed,
                                           manifest.train_fraction, manifest.data_dir);

    ResultsTable table;
    table.dataset = data.label;
    table.n_train = data.split.train.size();
    table.n_val = data.split.val.size();

    if (baseline.mode == BaselineMode::builtin_map) {
      table.rows.push_back(
          run_baseline_builtin(data, manifest.seed, manifest.n_bins, manifest.weighting));
      ++outcome.baseline_evaluations;
    } else if (baseline.mode == BaselineMode::external_probs) {
      table.rows.push_back(run_baseline_external(data, load_probability_csv(baseline.probs_file),
                                                 manifest.n_bins, manifest.weighting));
      ++outcome.baseline_evaluations;
    }

    std::vector<EvalResult> runs(manifest.configs.size());
    parallel_for(manifest.configs.size(), manifest.threads, [&](std::size_t i) {
      TrainConfig cfg = manifest.configs[i];
      cfg.seed = manifest.seed ^ static_cast<std::uint64_t>(i);
      runs[i] = run_config(data, cfg, manifest.n_bins, manifest.weighting);
    });
    outcome.training_runs += runs.size();
    for (auto& r : runs) table.rows.push_back(std::move(r));

    const auto dir = multi ? manifest.output_dir / data.label : manifest.output_dir;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create output directory " + dir.string());

    std::string csv = metrics_csv_header() + "\n";
    std::string csv_ext = metrics_csv_header(true) + "\n";
    for (const auto& r : table.rows) {
      csv += metrics_csv_row(r.id, r.metrics) + "\n";
      csv_ext += metrics_csv_row(r.id, r.metrics, true) + "\n";
      write_reliability_csv(r.bins, dir / ("reliability_" + r.id + ".csv"));
      emit_reliability_svg(r.bins, dir / ("reliability_" + r.id + ".svg"),
                           data.label + " " + r.id);
      if (r.training) {
        write_history_csv(r.training->history, dir / ("history_" + r.id + ".csv"));
        if (manifest.write_models) {
          save_model({r.training->params, *r.config}, dir / ("model_" + r.id + ".vblm"));
        }
      }
    }
    write_text(csv, dir / "results.csv");
    write_text(csv_ext, dir / "results_extended.csv");
    write_text(format_table(table), dir / "table.txt");
    outcome.tables.push_back(std::move(table));
  }

  // Rows are configurations, columns datasets.
  std::vector<std::string> row_labels;
  for (const auto& r : outcome.tables.front().rows) row_labels.push_back(r.id);
  std::vector<std::string> column_labels;
  for (const auto& t : outcome.tables) column_labels.push_back(t.dataset);
  std::vector<GridPanel> panels;
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    for (const auto& t : outcome.tables) {
      if (r >= t.rows.size()) throw InvalidArgument("tables have different row counts");
      panels.push_back({row_labels[r], t.dataset, t.rows[r].bins});
    }
  }
  emit_reliability_grid_svg(row_labels, column_labels, panels,
                            manifest.output_dir / "reliability_grid.svg");
  return outcome;
}

}  // namespace vbll
