#pragma once

// Loading, cleaning, splitting and standardizing the tabular medical datasets.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vbll/matrix.hpp"

namespace vbll {

enum class DatasetName { breast_cancer, pima, heart_cleveland, custom };

std::string_view to_string(DatasetName name);

// Maps a raw label token to {0,1}; nullopt for tokens outside the rule.
using LabelRule = std::function<std::optional<int>(std::string_view)>;

struct DatasetSchema {
  DatasetName name = DatasetName::custom;
  // Full column list of the source file, in order. Used to read headerless files.
  std::vector<std::string> file_columns;
  std::vector<std::string> feature_columns;
  std::string label_column;
  LabelRule label_rule;
  std::string missing_marker = "?";
  bool accept_headerless = false;
};

// Built-in presets for the three public files.
DatasetSchema breast_cancer_schema();
DatasetSchema pima_schema();
DatasetSchema heart_cleveland_schema();
// Accepts "breast_cancer"/"wdbc", "pima", "heart_cleveland"/"cleveland"/"heart".
std::optional<DatasetSchema> schema_by_name(std::string_view name);

struct TabularDataset {
  Matrix X;                           // N x D, no missing values
  std::vector<int> y;                 // N labels in {0,1}
  std::vector<std::size_t> row_ids;   // source data-row index (0-based)
  DatasetSchema schema;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return X.cols; }
  std::size_t count_label(int label) const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::uint64_t seed = 42;
  double train_fraction = 0.7;
};

struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
};

// Reads a CSV (header row, or headerless if the schema allows it), drops rows
// with missing feature values, and maps labels. Throws FormatError on a
// missing file, header mismatch, unparsable value, unknown label or a
// single-class result.
TabularDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);

// Cleaned re-export: row_id,label,f0..f{D-1}, full double precision.
void write_clean_csv(const TabularDataset& ds, const std::filesystem::path& path);
TabularDataset load_clean_csv(const std::filesystem::path& path);

// Cleveland "num" (0..4) to absence/presence.
int binarize_heart_label(int raw);

// Per-class largest-remainder allocation of round(train_fraction * N) rows,
// shuffled with a seeded engine. Both index lists are sorted.
SplitIndices stratified_split(const TabularDataset& ds, double train_fraction,
                              std::uint64_t seed);

// Population mean/std over the rows in `idx`; zero-variance columns get std 1.
Scaler fit_scaler(const Matrix& X, std::span<const std::size_t> idx);
inline Scaler fit_scaler(const TabularDataset& ds, std::span<const std::size_t> idx) {
  return fit_scaler(ds.X, idx);
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& X);
Matrix invert_scaler(const Scaler& scaler, const Matrix& Z);

}  // namespace vbll
