#pragma once

// Binary classification and calibration metrics over positive-class
// probabilities.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vbll {

inline constexpr double kProbClampEps = 1e-12;
inline constexpr std::size_t kDefaultBins = 40;

struct PredictionSet {
  std::vector<double> p_pos;  // P(y = 1)
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

// Throws InvalidArgument when sizes differ, N = 0, a label is outside {0,1}
// or a probability is non-finite / outside [0,1].
void validate(const PredictionSet& pred);

struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class EceWeighting { mass_weighted, bin_mean };

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc_roc = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  double ece = 0.0;  // under the weighting requested for the report
  double ece_mass = 0.0;
  double ece_bin_mean = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

// Predicted label is [p_pos >= threshold]; zero denominators give 0.
ClassificationReport classification_report(const PredictionSet& pred, double threshold = 0.5);

// Mann-Whitney U with average ranks for ties. Throws for single-class input.
double auc_roc(const PredictionSet& pred);

// Mean binary log loss with probabilities clamped to [eps, 1 - eps].
double nll(const PredictionSet& pred);

// Mean of (p_pos - y)^2.
double brier(const PredictionSet& pred);

// Equal-width bins over [0,1]; bin b holds p in [b/B, (b+1)/B), the last bin
// is closed on the right.
std::size_t bin_index(double p, std::size_t n_bins);

double ece(const PredictionSet& pred, std::size_t n_bins = kDefaultBins,
           EceWeighting weighting = EceWeighting::mass_weighted);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> confidence;  // mean p_pos, absent for empty bins
  std::optional<double> accuracy;    // fraction of positives, absent for empty bins

  bool operator==(const ReliabilityBin&) const = default;
};

struct ReliabilityBins {
  std::vector<ReliabilityBin> bins;

  std::size_t n_bins() const { return bins.size(); }
  std::size_t total() const;
  bool operator==(const ReliabilityBins&) const = default;
};

ReliabilityBins reliability_bins(const PredictionSet& pred, std::size_t n_bins = kDefaultBins);

MetricsReport evaluate_predictions(const PredictionSet& pred,
                                   std::size_t n_bins = kDefaultBins,
                                   EceWeighting weighting = EceWeighting::mass_weighted);

// Range invariants of a report; returns the first violation, if any.
std::optional<std::string> check_invariants(const MetricsReport& r);

// CSV serialization, 6 decimals. Columns: config,acc,f1,auc,nll,brier,ece and,
// in extended mode, precision,recall,ece_mass,ece_binmean.
std::string metrics_csv_header(bool extended = false);
std::string metrics_csv_row(const std::string& config, const MetricsReport& r,
                            bool extended = false);

// bin_lo,bin_hi,count,conf,acc (conf/acc empty for empty bins).
void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path);

}  // namespace vbll
