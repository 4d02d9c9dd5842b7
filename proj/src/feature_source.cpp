#include "vbll/feature_source.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <unordered_map>

#include "csv_util.hpp"
#include "vbll/error.hpp"

namespace vbll {

EmbeddingSet raw_features(const TabularDataset& ds, const Scaler& scaler) {
  EmbeddingSet out;
  out.E = apply_scaler(scaler, ds.X);
  out.row_ids = ds.row_ids;
  out.labels = ds.y;
  out.source = FeatureKind::raw;
  return out;
}

Matrix random_projection_matrix(std::size_t in_dim, std::size_t target_dim,
                                std::uint64_t seed) {
  if (in_dim == 0 || target_dim == 0) {
    throw InvalidArgument("random projection needs in_dim >= 1 and target_dim >= 1");
  }
  Matrix P(in_dim, target_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& v : P.data) v = normal(rng) * scale;
  return P;
}

Matrix project(const Matrix& X, const Matrix& P) {
  if (X.cols != P.rows) throw InvalidArgument("project: dimension mismatch");
  Matrix out(X.rows, P.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    auto dst = out.row(i);
    const auto src = X.row(i);
    for (std::size_t k = 0; k < X.cols; ++k) {
      const double a = src[k];
      const auto prow = P.row(k);
      for (std::size_t j = 0; j < P.cols; ++j) dst[j] += a * prow[j];
    }
  }
  return out;
}

EmbeddingSet random_projection(const TabularDataset& ds, const Scaler& scaler,
                               std::size_t target_dim, std::uint64_t seed) {
  EmbeddingSet out;
  out.E = project(apply_scaler(scaler, ds.X),
                  random_projection_matrix(ds.dim(), target_dim, seed));
  out.row_ids = ds.row_ids;
  out.labels = ds.y;
  out.source = FeatureKind::random_projection;
  return out;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embedding file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_finite(const EmbeddingSet& set, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < set.E.data.size(); ++i) {
    if (!std::isfinite(set.E.data[i])) {
      throw FormatError("non-finite embedding value at row " +
                        std::to_string(i / set.E.cols) + " in " + path.string());
    }
  }
}

}  // namespace

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  const auto& magic = EmbeddingFileHeader::kMagic;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    if (bytes.rfind("row_id", 0) == 0) return load_embeddings_csv(path);
    throw FormatError("bad magic in embedding file " + path.string());
  }
  if (bytes.size() < EmbeddingFileHeader::kSize) {
    throw FormatError("truncated header in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EmbeddingFileHeader h;
  h.version = get_u32(p + 4);
  h.n_rows = get_u32(p + 8);
  h.dim = get_u32(p + 12);
  if (p[16] > 1) throw FormatError("bad has_labels flag in " + path.string());
  h.has_labels = p[16] == 1;
  if (h.version != EmbeddingFileHeader::kVersion) {
    throw FormatError("unsupported embedding file version " + std::to_string(h.version));
  }
  if (h.n_rows == 0 || h.dim == 0) throw FormatError("empty embedding set in " + path.string());

  const std::size_t n_values = static_cast<std::size_t>(h.n_rows) * h.dim;
  const std::size_t need =
      EmbeddingFileHeader::kSize + n_values * 4 + (h.has_labels ? h.n_rows : 0);
  if (bytes.size() < need) throw FormatError("truncated payload in " + path.string());

  EmbeddingSet set;
  set.source = FeatureKind::external;
  set.E = Matrix(h.n_rows, h.dim);
  const unsigned char* payload = p + EmbeddingFileHeader::kSize;
  for (std::size_t i = 0; i < n_values; ++i) {
    set.E.data[i] = static_cast<double>(std::bit_cast<float>(get_u32(payload + 4 * i)));
  }
  if (h.has_labels) {
    const unsigned char* lab = payload + 4 * n_values;
    set.labels.resize(h.n_rows);
    for (std::size_t i = 0; i < h.n_rows; ++i) {
      if (lab[i] > 1) throw FormatError("label byte out of range in " + path.string());
      set.labels[i] = lab[i];
    }
  }
  set.row_ids.resize(h.n_rows);
  for (std::size_t i = 0; i < h.n_rows; ++i) set.row_ids[i] = i;
  set.trailer = bytes.substr(need);
  check_finite(set, path);
  return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  if (set.has_labels() && set.labels.size() != set.size()) {
    throw InvalidArgument("save_embeddings: label count mismatch");
  }
  std::string buf;
  buf.reserve(EmbeddingFileHeader::kSize + set.E.data.size() * 4 + set.labels.size() +
              set.trailer.size());
  buf.append(EmbeddingFileHeader::kMagic.data(), 4);
  put_u32(buf, EmbeddingFileHeader::kVersion);
  put_u32(buf, static_cast<std::uint32_t>(set.size()));
  put_u32(buf, static_cast<std::uint32_t>(set.dim()));
  buf.push_back(set.has_labels() ? 1 : 0);
  for (double v : set.E.data) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  for (int l : set.labels) buf.push_back(static_cast<char>(l));
  buf += set.trailer;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

EmbeddingSet load_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty embedding file: " + path.string());
  const auto header = csv::split(line);
  if (header.size() < 3 || header[0] != "row_id" || header[1] != "label") {
    throw FormatError("header mismatch in " + path.string() + ": expected row_id,label,e0,...");
  }
  EmbeddingSet set;
  set.source = FeatureKind::external;
  set.E.cols = header.size() - 2;
  std::size_t labelled = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw FormatError(where + ": wrong field count");
    const auto id = csv::parse_int(f[0]);
    if (!id || *id < 0) throw FormatError(where + ": bad row_id");
    set.row_ids.push_back(static_cast<std::size_t>(*id));
    if (!f[1].empty()) {
      const auto l = csv::parse_int(f[1]);
      if (!l || (*l != 0 && *l != 1)) throw FormatError(where + ": bad label");
      set.labels.push_back(static_cast<int>(*l));
      ++labelled;
    }
    for (std::size_t j = 2; j < f.size(); ++j) {
      const auto v = csv::parse_double(f[j]);
      if (!v) throw FormatError(where + ": bad value '" + f[j] + "'");
      set.E.data.push_back(*v);
    }
  }
  set.E.rows = set.row_ids.size();
  if (set.E.rows == 0) throw FormatError("empty embedding set in " + path.string());
  if (labelled != 0 && labelled != set.E.rows) {
    throw FormatError("labels present on only some rows in " + path.string());
  }
  check_finite(set, path);
  return set;
}

void save_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "row_id,label";
  for (std::size_t j = 0; j < set.dim(); ++j) out << ",e" << j;
  out << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.row_ids[i] << ',';
    if (set.has_labels()) out << set.labels[i];
    for (double v : set.E.row(i)) out << ',' << csv::exact(v);
    out << '\n';
  }
}

EmbeddingSet align_to_dataset(EmbeddingSet set, const TabularDataset& ds) {
  if (set.size() != ds.size()) {
    throw FormatError("embedding rows (" + std::to_string(set.size()) +
                      ") do not match dataset rows (" + std::to_string(ds.size()) + ")");
  }
  const bool ids_are_positions = [&] {
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.row_ids[i] != i) return false;
    }
    return true;
  }();
  if (!ids_are_positions) {
    // Row ids name source rows: reorder into dataset order.
    std::unordered_map<std::size_t, std::size_t> where;
    for (std::size_t i = 0; i < set.size(); ++i) where.emplace(set.row_ids[i], i);
    std::vector<std::size_t> order;
    order.reserve(ds.size());
    for (auto id : ds.row_ids) {
      const auto it = where.find(id);
      if (it == where.end()) {
        throw FormatError("embedding set has no row_id " + std::to_string(id));
      }
      order.push_back(it->second);
    }
    set.E = take_rows(set.E, order);
    if (set.has_labels()) set.labels = take(set.labels, order);
  }
  set.row_ids = ds.row_ids;
  if (set.has_labels() && set.labels != ds.y) {
    throw FormatError("embedding labels disagree with dataset labels");
  }
  set.labels = ds.y;
  return set;
}

}  // namespace vbll
