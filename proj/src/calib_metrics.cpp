#include "vbll/calib_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "vbll/error.hpp"

namespace vbll {

void validate(const PredictionSet& pred) {
  if (pred.p_pos.size() != pred.y.size()) {
    throw InvalidArgument("prediction set: " + std::to_string(pred.p_pos.size()) +
                          " probabilities for " + std::to_string(pred.y.size()) + " labels");
  }
  if (pred.y.empty()) throw InvalidArgument("prediction set is empty");
  for (std::size_t i = 0; i < pred.y.size(); ++i) {
    if (pred.y[i] != 0 && pred.y[i] != 1) {
      throw InvalidArgument("label outside {0,1} at index " + std::to_string(i));
    }
    const double p = pred.p_pos[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InvalidArgument("probability outside [0,1] at index " + std::to_string(i));
    }
  }
}

ClassificationReport classification_report(const PredictionSet& pred, double threshold) {
  validate(pred);
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool predicted = pred.p_pos[i] >= threshold;
    const bool actual = pred.y[i] == 1;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ClassificationReport r;
  r.accuracy = ratio(tp + tn, pred.size());
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double auc_roc(const PredictionSet& pred) {
  validate(pred);
  const std::size_t n = pred.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pred.p_pos[a] < pred.p_pos[b]; });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pred.p_pos[order[j]] == pred.p_pos[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pred.y[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("auc_roc needs both classes");
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double nll(const PredictionSet& pred) {
  validate(pred);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.p_pos[i], kProbClampEps, 1.0 - kProbClampEps);
    total -= pred.y[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.size());
}

double brier(const PredictionSet& pred) {
  validate(pred);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.p_pos[i] - static_cast<double>(pred.y[i]);
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

std::size_t bin_index(double p, std::size_t n_bins) {
  if (n_bins == 0) throw InvalidArgument("n_bins must be >= 1");
  const double B = static_cast<double>(n_bins);
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return n_bins - 1;
  auto b = static_cast<std::size_t>(std::floor(p * B));
  b = std::min(b, n_bins - 1);
  // Agree with the edge comparison b/B <= p < (b+1)/B despite rounding in p*B.
  while (b > 0 && p < static_cast<double>(b) / B) --b;
  while (b + 1 < n_bins && p >= static_cast<double>(b + 1) / B) ++b;
  return b;
}

namespace {

struct BinSums {
  std::vector<std::size_t> count;
  std::vector<double> conf;
  std::vector<double> pos;
};

BinSums accumulate_bins(const PredictionSet& pred, std::size_t n_bins) {
  BinSums s{std::vector<std::size_t>(n_bins, 0), std::vector<double>(n_bins, 0.0),
            std::vector<double>(n_bins, 0.0)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto b = bin_index(pred.p_pos[i], n_bins);
    ++s.count[b];
    s.conf[b] += pred.p_pos[i];
    s.pos[b] += static_cast<double>(pred.y[i]);
  }
  return s;
}

}  // namespace

double ece(const PredictionSet& pred, std::size_t n_bins, EceWeighting weighting) {
  if (n_bins == 0) throw InvalidArgument("n_bins must be >= 1");
  validate(pred);
  const auto s = accumulate_bins(pred, n_bins);
  const double n = static_cast<double>(pred.size());
  double total = 0.0;
  std::size_t non_empty = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (s.count[b] == 0) continue;
    const double cnt = static_cast<double>(s.count[b]);
    const double gap = std::abs(s.pos[b] / cnt - s.conf[b] / cnt);
    total += weighting == EceWeighting::mass_weighted ? (cnt / n) * gap : gap;
    ++non_empty;
  }
  if (weighting == EceWeighting::bin_mean) total /= static_cast<double>(non_empty);
  return total;
}

std::size_t ReliabilityBins::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

ReliabilityBins reliability_bins(const PredictionSet& pred, std::size_t n_bins) {
  if (n_bins == 0) throw InvalidArgument("n_bins must be >= 1");
  validate(pred);
  const auto s = accumulate_bins(pred, n_bins);
  const double B = static_cast<double>(n_bins);
  ReliabilityBins out;
  out.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = out.bins[b];
    bin.lower = static_cast<double>(b) / B;
    bin.upper = static_cast<double>(b + 1) / B;
    bin.count = s.count[b];
    if (bin.count > 0) {
      const double cnt = static_cast<double>(bin.count);
      bin.confidence = s.conf[b] / cnt;
      bin.accuracy = s.pos[b] / cnt;
    }
  }
  return out;
}

MetricsReport evaluate_predictions(const PredictionSet& pred, std::size_t n_bins,
                                   EceWeighting weighting) {
  const auto cls = classification_report(pred);
  MetricsReport r;
  r.accuracy = cls.accuracy;
  r.precision = cls.precision;
  r.recall = cls.recall;
  r.f1 = cls.f1;
  r.auc_roc = auc_roc(pred);
  r.nll = nll(pred);
  r.brier = brier(pred);
  r.ece_mass = ece(pred, n_bins, EceWeighting::mass_weighted);
  r.ece_bin_mean = ece(pred, n_bins, EceWeighting::bin_mean);
  r.ece = weighting == EceWeighting::mass_weighted ? r.ece_mass : r.ece_bin_mean;
  return r;
}

std::optional<std::string> check_invariants(const MetricsReport& r) {
  const std::pair<const char*, double> unit[] = {
      {"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
      {"f1", r.f1},             {"auc_roc", r.auc_roc},     {"brier", r.brier},
      {"ece", r.ece},           {"ece_mass", r.ece_mass},   {"ece_bin_mean", r.ece_bin_mean}};
  for (const auto& [name, v] : unit) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      return std::string(name) + " outside [0,1]: " + std::to_string(v);
    }
  }
  if (!std::isfinite(r.nll) || r.nll < 0.0) return "nll negative or non-finite";
  return std::nullopt;
}

std::string metrics_csv_header(bool extended) {
  std::string h = "config,acc,f1,auc,nll,brier,ece";
  if (extended) h += ",precision,recall,ece_mass,ece_binmean";
  return h;
}

std::string metrics_csv_row(const std::string& config, const MetricsReport& r, bool extended) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", config.c_str(),
                r.accuracy, r.f1, r.auc_roc, r.nll, r.brier, r.ece);
  std::string row = buf;
  if (extended) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f", r.precision, r.recall, r.ece_mass,
                  r.ece_bin_mean);
    row += buf;
  }
  return row;
}

void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "bin_lo,bin_hi,count,conf,acc\n";
  char buf[160];
  for (const auto& b : bins.bins) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu,", b.lower, b.upper, b.count);
    out << buf;
    if (b.confidence) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f", *b.confidence, *b.accuracy);
      out << buf;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace vbll
