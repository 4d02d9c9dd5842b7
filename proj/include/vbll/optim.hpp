#pragma once

// Adam, KL annealing schedules and the full-batch training loop.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "vbll/config.hpp"
#include "vbll/matrix.hpp"
#include "vbll/vbll_head.hpp"

namespace vbll {

struct AnnealSchedule {
  KlMode mode = KlMode::cosine;
  unsigned total_epochs = 50;
};

// linear: t/T; cosine: (1 - cos(pi t/T)) / 2. Throws for t > T.
double anneal_beta(const AnnealSchedule& s, unsigned epoch);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  ParamGradients m;
  ParamGradients v;

  static AdamState for_params(const VBLLParams& p, double lr = 1e-3);
};

// One bias-corrected Adam update of every tensor. Throws NumericalError on a
// non-finite gradient, leaving params and state untouched.
void adam_step(AdamState& state, VBLLParams& params, const ParamGradients& grads);

struct EpochRecord {
  double loss = 0.0;
  double ce = 0.0;
  double kl = 0.0;
  double beta = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  VBLLParams params;
  TrainHistory history;
};

// cfg.epochs full-batch Adam steps. Each epoch t draws cfg.train_samples noise
// samples, evaluates the loss at beta(t) (schedule evaluated at t = 0..T-1,
// or cfg.fixed_beta), records it, steps, and clamps log-variances.
TrainResult train(const TrainConfig& cfg, const Matrix& E_train, std::span<const int> y_train);

// epoch,loss,ce,kl,beta
void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);

}  // namespace vbll
