#include "vbll/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "csv_util.hpp"
#include "vbll/error.hpp"
#include "vbll/kernels.hpp"
#include "vbll/log.hpp"

namespace vbll {

std::string_view to_string(DatasetName name) {
  switch (name) {
    case DatasetName::breast_cancer: return "breast_cancer";
    case DatasetName::pima: return "pima";
    case DatasetName::heart_cleveland: return "heart_cleveland";
    case DatasetName::custom: return "custom";
  }
  return "custom";
}

std::size_t TabularDataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

int binarize_heart_label(int raw) {
  if (raw < 0 || raw > 4) {
    throw InvalidArgument("heart label out of range 0..4: " + std::to_string(raw));
  }
  return raw == 0 ? 0 : 1;
}

namespace {

std::optional<int> zero_one_label(std::string_view token) {
  const auto v = csv::parse_double(token);
  if (!v) return std::nullopt;
  if (*v == 0.0) return 0;
  if (*v == 1.0) return 1;
  return std::nullopt;
}

}  // namespace

DatasetSchema breast_cancer_schema() {
  static const char* kBase[] = {"radius",      "texture",        "perimeter", "area",
                                "smoothness",  "compactness",    "concavity", "concave_points",
                                "symmetry",    "fractal_dimension"};
  DatasetSchema s;
  s.name = DatasetName::breast_cancer;
  s.file_columns = {"id", "diagnosis"};
  for (const char* suffix : {"_mean", "_se", "_worst"}) {
    for (const char* base : kBase) s.feature_columns.push_back(std::string(base) + suffix);
  }
  s.file_columns.insert(s.file_columns.end(), s.feature_columns.begin(),
                        s.feature_columns.end());
  s.label_column = "diagnosis";
  s.label_rule = [](std::string_view t) -> std::optional<int> {
    if (t == "M") return 1;
    if (t == "B") return 0;
    return std::nullopt;
  };
  s.accept_headerless = true;
  return s;
}

DatasetSchema pima_schema() {
  DatasetSchema s;
  s.name = DatasetName::pima;
  s.feature_columns = {"Pregnancies", "Glucose", "BloodPressure", "SkinThickness",
                       "Insulin",     "BMI",     "DiabetesPedigreeFunction", "Age"};
  s.file_columns = s.feature_columns;
  s.file_columns.push_back("Outcome");
  s.label_column = "Outcome";
  s.label_rule = zero_one_label;
  s.accept_headerless = true;
  return s;
}

DatasetSchema heart_cleveland_schema() {
  DatasetSchema s;
  s.name = DatasetName::heart_cleveland;
  s.feature_columns = {"age",     "sex",   "cp",      "trestbps", "chol",
                       "fbs",     "restecg", "thalach", "exang",  "oldpeak",
                       "slope",   "ca",    "thal"};
  s.file_columns = s.feature_columns;
  s.file_columns.push_back("num");
  s.label_column = "num";
  s.label_rule = [](std::string_view t) -> std::optional<int> {
    const auto v = csv::parse_double(t);
    if (!v || *v != std::floor(*v) || *v < 0.0 || *v > 4.0) return std::nullopt;
    return binarize_heart_label(static_cast<int>(*v));
  };
  s.accept_headerless = true;
  return s;
}

std::optional<DatasetSchema> schema_by_name(std::string_view name) {
  if (name == "breast_cancer" || name == "wdbc") return breast_cancer_schema();
  if (name == "pima") return pima_schema();
  if (name == "heart_cleveland" || name == "cleveland" || name == "heart") {
    return heart_cleveland_schema();
  }
  return std::nullopt;
}

TabularDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  if (schema.feature_columns.empty()) throw InvalidArgument("schema has no feature columns");
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty dataset file: " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);

  auto first = csv::split(line);
  std::vector<std::string> columns;
  bool first_is_data = false;
  const bool looks_numeric = !first.empty() && csv::parse_double(first.front()).has_value();
  if (looks_numeric && schema.accept_headerless && first.size() == schema.file_columns.size()) {
    columns = schema.file_columns;
    first_is_data = true;
  } else {
    columns = first;
  }

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < columns.size(); ++i) position.emplace(columns[i], i);
  auto locate = [&](const std::string& name) {
    const auto it = position.find(name);
    if (it == position.end()) {
      throw FormatError("header mismatch in " + path.string() + ": missing column '" +
                        name + "'");
    }
    return it->second;
  };
  std::vector<std::size_t> feature_pos;
  for (const auto& c : schema.feature_columns) feature_pos.push_back(locate(c));
  const std::size_t label_pos = locate(schema.label_column);

  TabularDataset ds;
  ds.schema = schema;
  ds.X.cols = schema.feature_columns.size();
  std::size_t data_row = 0;
  std::size_t dropped = 0;
  std::size_t line_no = first_is_data ? 1 : 2;

  auto consume = [&](const std::vector<std::string>& fields) {
    if (fields.size() < columns.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(columns.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(feature_pos.size());
    bool missing = false;
    for (std::size_t k = 0; k < feature_pos.size(); ++k) {
      const auto& tok = fields[feature_pos[k]];
      if (tok.empty() || tok == schema.missing_marker) {
        missing = true;
        break;
      }
      const auto v = csv::parse_double(tok);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": non-numeric value '" + tok + "' in column " +
                          schema.feature_columns[k]);
      }
      row.push_back(*v);
    }
    if (missing) {
      ++dropped;
      return;
    }
    const auto label = schema.label_rule(fields[label_pos]);
    if (!label) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": unknown raw label '" + fields[label_pos] + "'");
    }
    ds.X.data.insert(ds.X.data.end(), row.begin(), row.end());
    ds.y.push_back(*label);
    ds.row_ids.push_back(data_row);
  };

  if (first_is_data) {
    consume(first);
    ++data_row;
    ++line_no;
  }
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) {
      ++line_no;
      continue;
    }
    consume(csv::split(line));
    ++data_row;
    ++line_no;
  }
  ds.X.rows = ds.y.size();

  const auto pos = ds.count_label(1);
  const auto neg = ds.count_label(0);
  if (pos == 0 || neg == 0) {
    throw FormatError("dataset " + path.string() + " has a single class after cleaning");
  }
  std::ostringstream msg;
  msg << to_string(schema.name) << ": " << ds.size() << " rows (" << dropped
      << " dropped for missing values), D=" << ds.dim() << ", positives=" << pos
      << ", negatives=" << neg;
  log::info(msg.str());
  return ds;
}

void write_clean_csv(const TabularDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "row_id,label";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.row_ids[i] << ',' << ds.y[i];
    for (double v : ds.X.row(i)) out << ',' << csv::exact(v);
    out << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

TabularDataset load_clean_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty dataset file: " + path.string());
  const auto header = csv::split(line);
  if (header.size() < 3 || header[0] != "row_id" || header[1] != "label") {
    throw FormatError("header mismatch in " + path.string() +
                      ": expected row_id,label,f0,...");
  }
  TabularDataset ds;
  ds.schema.name = DatasetName::custom;
  ds.schema.file_columns = header;
  ds.schema.feature_columns.assign(header.begin() + 2, header.end());
  ds.schema.label_column = "label";
  ds.schema.label_rule = zero_one_label;
  ds.X.cols = header.size() - 2;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw FormatError(where + ": wrong field count");
    const auto id = csv::parse_int(f[0]);
    const auto label = zero_one_label(f[1]);
    if (!id || *id < 0) throw FormatError(where + ": bad row_id");
    if (!label) throw FormatError(where + ": unknown raw label '" + f[1] + "'");
    for (std::size_t j = 2; j < f.size(); ++j) {
      const auto v = csv::parse_double(f[j]);
      if (!v || !std::isfinite(*v)) throw FormatError(where + ": bad value '" + f[j] + "'");
      ds.X.data.push_back(*v);
    }
    ds.row_ids.push_back(static_cast<std::size_t>(*id));
    ds.y.push_back(*label);
  }
  ds.X.rows = ds.y.size();
  if (ds.count_label(0) == 0 || ds.count_label(1) == 0) {
    throw FormatError("dataset " + path.string() + " has a single class");
  }
  return ds;
}

SplitIndices stratified_split(const TabularDataset& ds, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0,1)");
  }
  const std::size_t n = ds.size();
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < n; ++i) members[ds.y[i]].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (members[c].size() < 2) {
      throw InvalidArgument("class " + std::to_string(c) + " has fewer than 2 members");
    }
  }

  // Quotas n_c * T / N sum to T exactly; hand out the remainder by largest
  // fractional part (ties to the lower class label).
  const auto total = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::size_t alloc[2];
  std::size_t rem[2];
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    alloc[c] = members[c].size() * total / n;
    rem[c] = members[c].size() * total % n;
    assigned += alloc[c];
  }
  for (std::size_t left = total - assigned; left > 0; --left) {
    const int c = rem[1] > rem[0] ? 1 : 0;
    ++alloc[c];
    rem[c] = 0;
  }

  SplitIndices split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto& idx = members[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + alloc[c]);
    split.val.insert(split.val.end(), idx.begin() + alloc[c], idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

Scaler fit_scaler(const Matrix& X, std::span<const std::size_t> idx) {
  if (idx.empty()) throw InvalidArgument("fit_scaler: empty index list");
  const std::size_t d = X.cols;
  const double count = static_cast<double>(idx.size());
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (auto i : idx) {
    const auto r = X.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= count;
  for (auto i : idx) {
    const auto r = X.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = r[j] - s.mean[j];
      s.std[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(s.std[j] / count);
    // Rounding residue from the mean pass counts as zero variance.
    s.std[j] = sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? 1.0 : sd;
  }
  return s;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& X) {
  if (scaler.mean.size() != X.cols || scaler.std.size() != X.cols) {
    throw InvalidArgument("apply_scaler: scaler has " + std::to_string(scaler.mean.size()) +
                          " columns, matrix has " + std::to_string(X.cols));
  }
  Matrix out(X.rows, X.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < X.rows; ++i) {
    k.standardize(X.row(i).data(), scaler.mean.data(), scaler.std.data(),
                  out.row(i).data(), X.cols);
  }
  return out;
}

Matrix invert_scaler(const Scaler& scaler, const Matrix& Z) {
  if (scaler.mean.size() != Z.cols) throw InvalidArgument("invert_scaler: dimension mismatch");
  Matrix out(Z.rows, Z.cols);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    for (std::size_t j = 0; j < Z.cols; ++j) {
      out(i, j) = Z(i, j) * scaler.std[j] + scaler.mean[j];
    }
  }
  return out;
}

}  // namespace vbll
