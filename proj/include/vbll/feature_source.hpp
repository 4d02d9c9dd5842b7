#pragma once

// Frozen per-row feature vectors consumed by the last-layer head.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vbll/data_ingest.hpp"
#include "vbll/matrix.hpp"

namespace vbll {

enum class FeatureKind { raw, random_projection, external };

struct EmbeddingSet {
  Matrix E;                          // N x H
  std::vector<std::size_t> row_ids;  // aligned with the source dataset rows
  std::vector<int> labels;           // empty when the source carried none
  FeatureKind source = FeatureKind::raw;
  // Opaque text appended after the binary payload (exporter metadata).
  std::string trailer;

  std::size_t size() const { return E.rows; }
  std::size_t dim() const { return E.cols; }
  bool has_labels() const { return !labels.empty(); }
};

// Binary layout, all integers little-endian:
//   "VBLE" | u32 version | u32 n_rows | u32 dim | u8 has_labels
//   | n_rows*dim f32 row-major | n_rows u8 labels (if has_labels) | trailer
struct EmbeddingFileHeader {
  static constexpr std::array<char, 4> kMagic{'V', 'B', 'L', 'E'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kSize = 17;

  std::uint32_t version = kVersion;
  std::uint32_t n_rows = 0;
  std::uint32_t dim = 0;
  bool has_labels = false;
};

EmbeddingSet raw_features(const TabularDataset& ds, const Scaler& scaler);

// D x target_dim matrix with i.i.d. N(0,1)/sqrt(D) entries.
Matrix random_projection_matrix(std::size_t in_dim, std::size_t target_dim,
                                std::uint64_t seed);
// Plain X * P.
Matrix project(const Matrix& X, const Matrix& P);

EmbeddingSet random_projection(const TabularDataset& ds, const Scaler& scaler,
                               std::size_t target_dim, std::uint64_t seed);

// Reads a VBLE binary file or, failing the magic check on a file ending in
// .csv, the CSV fallback `row_id,label,e0..e{H-1}`. Throws FormatError on bad
// magic/version, truncated payload, empty set or non-finite values.
EmbeddingSet load_embeddings(const std::filesystem::path& path);
EmbeddingSet load_embeddings_csv(const std::filesystem::path& path);

// Values are narrowed to f32. Row ids are not part of the binary format.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
void save_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path);

// Binds an external set to a dataset: row counts must agree and, when the
// set carries labels, they must equal the dataset labels. Binary sets get
// the dataset's row ids; CSV sets are reordered by row id.
EmbeddingSet align_to_dataset(EmbeddingSet set, const TabularDataset& ds);

}  // namespace vbll
