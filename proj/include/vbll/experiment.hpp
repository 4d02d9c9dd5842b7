#pragma once

// Experiment grid: baseline plus VBLL configurations on one or more datasets,
// with results tables and reliability artifacts written to disk.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vbll/calib_metrics.hpp"
#include "vbll/config.hpp"
#include "vbll/data_ingest.hpp"
#include "vbll/feature_source.hpp"
#include "vbll/optim.hpp"

namespace vbll {

struct FeatureSpec {
  FeatureKind kind = FeatureKind::raw;
  std::size_t projection_dim = 0;  // random_projection only
  std::filesystem::path file;      // external only
};

// "raw", "proj:K" or "file:PATH".
FeatureSpec parse_feature_spec(const std::string& text);

enum class BaselineMode { none, builtin_map, external_probs };

struct BaselineSpec {
  BaselineMode mode = BaselineMode::builtin_map;
  std::filesystem::path probs_file;
};

// "map", "none" or "probs:PATH".
BaselineSpec parse_baseline_spec(const std::string& text);

struct ExperimentManifest {
  // Preset names (breast_cancer, pima, heart_cleveland) or CSV paths.
  std::vector<std::string> datasets;
  // One feature spec for all datasets, or one per dataset.
  std::vector<FeatureSpec> features{FeatureSpec{}};
  std::vector<TrainConfig> configs;
  // One baseline spec for all datasets, or one per dataset.
  std::vector<BaselineSpec> baselines{BaselineSpec{}};
  std::uint64_t seed = 42;
  double train_fraction = 0.7;
  std::size_t n_bins = kDefaultBins;
  EceWeighting weighting = EceWeighting::mass_weighted;
  std::filesystem::path output_dir;
  std::filesystem::path data_dir;  // empty: VBLL_DATA_DIR, then ./data
  unsigned threads = 0;            // 0: hardware concurrency
  bool write_models = true;
};

// Throws InvalidArgument when nothing is requested or shapes disagree.
void validate(const ExperimentManifest& m);

struct PreparedData {
  std::string label;
  TabularDataset dataset;
  SplitIndices split;
  EmbeddingSet embeddings;
};

// Resolves a dataset name or path. Names are looked up in the data directory
// (wdbc.csv, pima.csv, cleveland.csv, or the original UCI file names).
TabularDataset resolve_dataset(const std::string& name_or_path,
                               const std::filesystem::path& data_dir = {});
std::filesystem::path default_data_dir();

PreparedData prepare_data(const std::string& dataset, const FeatureSpec& features,
                          std::uint64_t seed, double train_fraction,
                          const std::filesystem::path& data_dir = {});

struct EvalResult {
  std::string id;
  MetricsReport metrics;
  ReliabilityBins bins;
  PredictionSet predictions;
  std::optional<TrainResult> training;  // absent for external probabilities
  std::optional<TrainConfig> config;
};

// Trains on the training split and scores the Monte-Carlo predictive on the
// validation split.
EvalResult run_config(const PreparedData& data, const TrainConfig& cfg,
                      std::size_t n_bins = kDefaultBins,
                      EceWeighting weighting = EceWeighting::mass_weighted);

// Softmax-regression stand-in baseline scored with the MAP predictive.
EvalResult run_baseline_builtin(const PreparedData& data, std::uint64_t seed,
                                std::size_t n_bins = kDefaultBins,
                                EceWeighting weighting = EceWeighting::mass_weighted);

// Scores supplied probabilities (row_id -> p_pos) on the validation split.
// Throws FormatError naming the first validation row_id that is missing.
EvalResult run_baseline_external(const PreparedData& data,
                                 const std::map<std::size_t, double>& probs,
                                 std::size_t n_bins = kDefaultBins,
                                 EceWeighting weighting = EceWeighting::mass_weighted);

// CSV `row_id,p_pos`.
std::map<std::size_t, double> load_probability_csv(const std::filesystem::path& path);
void write_probability_csv(const std::vector<std::size_t>& row_ids,
                           const std::vector<double>& p_pos,
                           const std::filesystem::path& path);
// CSV with `row_id` and `label` columns (extra columns ignored).
std::map<std::size_t, int> load_label_csv(const std::filesystem::path& path);

struct ResultsTable {
  std::string dataset;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::vector<EvalResult> rows;  // baseline first, then configs in manifest order
};

struct GridOutcome {
  std::vector<ResultsTable> tables;
  std::size_t training_runs = 0;        // VBLL configuration runs
  std::size_t baseline_evaluations = 0;
};

// Writes, per dataset: results.csv, results_extended.csv, table.txt,
// reliability_<id>.csv/.svg, history_<id>.csv, model_<id>.vblm; and
// reliability_grid.svg at the top of output_dir. With several datasets each
// gets its own subdirectory.
GridOutcome run_grid(const ExperimentManifest& manifest);

// Fixed-width table with 3 decimals, in the Acc/F1/AUC/NLL/Brier/ECE layout,
// followed by published pretrained-model baseline values when known.
std::string format_table(const ResultsTable& table);

}  // namespace vbll
