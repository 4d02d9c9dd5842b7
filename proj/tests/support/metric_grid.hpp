#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "vbll/calib_metrics.hpp"

namespace metricgrid {

// Every multiset of (p, y) pairs with p on {0, 0.1, ..., 1} and size 1..max_n.
// Row order cannot change any metric, which is tested separately, so multisets
// stand in for all sequences.
inline void for_each_multiset(std::size_t max_n,
                              const std::function<void(const vbll::PredictionSet&)>& visit) {
  constexpr std::size_t kPairs = 22;
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (!idx.empty()) {
      vbll::PredictionSet s;
      for (auto k : idx) {
        s.p_pos.push_back(static_cast<double>(k / 2) / 10.0);
        s.y.push_back(static_cast<int>(k % 2));
      }
      visit(s);
    }
    if (idx.size() == max_n) return;
    for (std::size_t k = start; k < kPairs; ++k) {
      idx.push_back(k);
      rec(k);
      idx.pop_back();
    }
  };
  rec(0);
}

struct Outcome {
  std::size_t cases = 0;
  double worst = 0.0;
  std::string worst_metric;
};

inline Outcome compare_all(std::size_t max_n, std::size_t n_bins = vbll::kDefaultBins) {
  Outcome out;
  auto note = [&](const char* name, double got, double want) {
    const double d = std::fabs(got - want);
    if (d > out.worst || std::isnan(d)) {
      out.worst = std::isnan(d) ? 1.0 : d;
      out.worst_metric = name;
    }
  };
  for_each_multiset(max_n, [&](const vbll::PredictionSet& s) {
    ++out.cases;
    const auto rep = vbll::classification_report(s);
    const auto c = oracle::confusion(s.p_pos, s.y);
    note("accuracy", rep.accuracy, oracle::accuracy(s.p_pos, s.y));
    note("precision", rep.precision, oracle::precision(c));
    note("recall", rep.recall, oracle::recall(c));
    note("f1", rep.f1, oracle::f1(c));
    note("nll", vbll::nll(s), oracle::nll(s.p_pos, s.y));
    note("brier", vbll::brier(s), oracle::brier(s.p_pos, s.y));
    note("ece_mass", vbll::ece(s, n_bins, vbll::EceWeighting::mass_weighted),
         oracle::ece(s.p_pos, s.y, n_bins, true));
    note("ece_bin_mean", vbll::ece(s, n_bins, vbll::EceWeighting::bin_mean),
         oracle::ece(s.p_pos, s.y, n_bins, false));
    const bool both = std::count(s.y.begin(), s.y.end(), 1) > 0 &&
                      std::count(s.y.begin(), s.y.end(), 0) > 0;
    if (both) note("auc_roc", vbll::auc_roc(s), oracle::auc_pairs(s.p_pos, s.y));
  });
  return out;
}

}  // namespace metricgrid
