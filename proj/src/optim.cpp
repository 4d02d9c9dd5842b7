#include "vbll/optim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vbll/error.hpp"
#include "vbll/kernels.hpp"
#include "vbll/log.hpp"

namespace vbll {

double anneal_beta(const AnnealSchedule& s, unsigned epoch) {
  if (s.total_epochs == 0) throw InvalidArgument("anneal schedule needs total_epochs >= 1");
  if (epoch > s.total_epochs) {
    throw InvalidArgument("epoch " + std::to_string(epoch) + " beyond schedule length " +
                          std::to_string(s.total_epochs));
  }
  if (epoch == s.total_epochs) return 1.0;
  const double frac = static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
  if (s.mode == KlMode::linear) return frac;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * frac));
}

AdamState AdamState::for_params(const VBLLParams& p, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = VBLLParams::zeros(p.in_dim, p.n_classes);
  s.v = VBLLParams::zeros(p.in_dim, p.n_classes);
  return s;
}

void adam_step(AdamState& state, VBLLParams& params, const ParamGradients& grads) {
  if (grads.w_mu.size() != params.w_mu.size() || grads.b_mu.size() != params.b_mu.size() ||
      state.m.w_mu.size() != params.w_mu.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  grads.for_each_tensor([](const std::vector<double>& g) {
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericalError("non-finite gradient; aborting run");
    }
  });

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const kernels::AdamCoeffs c{state.lr,
                              state.beta1,
                              state.beta2,
                              state.eps,
                              1.0 - std::pow(state.beta1, t),
                              1.0 - std::pow(state.beta2, t)};
  const auto& k = kernels::active();
  auto run = [&](std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& g) {
    k.adam(theta.data(), m.data(), v.data(), g.data(), theta.size(), c);
  };
  run(params.w_mu, state.m.w_mu, state.v.w_mu, grads.w_mu);
  run(params.w_logvar, state.m.w_logvar, state.v.w_logvar, grads.w_logvar);
  run(params.b_mu, state.m.b_mu, state.v.b_mu, grads.b_mu);
  run(params.b_logvar, state.m.b_logvar, state.v.b_logvar, grads.b_logvar);
}

TrainResult train(const TrainConfig& cfg, const Matrix& E_train, std::span<const int> y_train) {
  if (E_train.rows != y_train.size()) {
    throw InvalidArgument("train: embeddings and labels are not aligned");
  }
  if (E_train.rows == 0) throw InvalidArgument("train: empty training set");
  if (cfg.epochs == 0) throw InvalidArgument("train: epochs must be >= 1");
  if (cfg.train_samples == 0) throw InvalidArgument("train: train_samples must be >= 1");
  if (cfg.fixed_beta && !(*cfg.fixed_beta >= 0.0 && *cfg.fixed_beta <= 1.0)) {
    throw InvalidArgument("train: fixed_beta must lie in [0,1]");
  }

  TrainResult result;
  result.params = init_params(E_train.cols, kNumClasses, cfg.init_logvar, cfg.weight_mu_coef,
                              cfg.seed);
  AdamState adam = AdamState::for_params(result.params, cfg.lr);
  const AnnealSchedule schedule{cfg.kl_mode, cfg.epochs};
  // Noise stream is independent of the initialization stream.
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  result.history.epochs.reserve(cfg.epochs);

  for (unsigned epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta = cfg.fixed_beta ? *cfg.fixed_beta : anneal_beta(schedule, epoch);
    const NoiseDraws noise = draw_noise(result.params, cfg.train_samples, rng, cfg.noise);
    const ElboGradient step = loss_gradients(result.params, E_train, y_train, beta, noise);
    result.history.epochs.push_back(
        {step.terms.loss, step.terms.ce_term, step.terms.kl_term, beta});
    adam_step(adam, result.params, step.grad);
    clamp_logvars(result.params);
  }

  if (log::level() <= log::Level::debug) {
    std::ostringstream msg;
    msg << "trained " << cfg.id << ": " << cfg.epochs << " epochs, final loss "
        << result.history.epochs.back().loss;
    log::debug(msg.str());
  }
  return result;
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "epoch,loss,ce,kl,beta\n";
  char buf[160];
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const auto& r = h.epochs[e];
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f,%.9f,%.9f\n", e, r.loss, r.ce, r.kl, r.beta);
    out << buf;
  }
}

}  // namespace vbll
