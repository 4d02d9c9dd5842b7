#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vbll/vbll_head.hpp"

namespace gradcheck {

struct Instance {
  vbll::VBLLParams params;
  vbll::Matrix E;
  std::vector<int> y;
  vbll::NoiseDraws noise;
  double beta = 0.5;
  vbll::ElboOptions opts;
};

inline Instance random_instance(std::uint64_t seed, std::size_t H, std::size_t N,
                                std::size_t samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Instance inst;
  inst.params = vbll::VBLLParams::zeros(H);
  for (auto& v : inst.params.w_mu) v = 0.5 * normal(rng);
  for (auto& v : inst.params.b_mu) v = 0.5 * normal(rng);
  for (auto& v : inst.params.w_logvar) v = -3.0 + 2.5 * unif(rng);
  for (auto& v : inst.params.b_logvar) v = -3.0 + 2.5 * unif(rng);
  inst.E = vbll::Matrix(N, H);
  for (auto& v : inst.E.data) v = normal(rng);
  for (std::size_t i = 0; i < N; ++i) inst.y.push_back(i % 2 == 0 ? 1 : static_cast<int>(rng() % 2));
  inst.noise = vbll::draw_noise(inst.params, samples, rng);
  inst.beta = unif(rng);
  inst.opts.n_train = N + rng() % 50;
  return inst;
}

struct Result {
  double worst_rel = 0.0;
  std::size_t coordinates = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor) over every coordinate.
inline Result compare(Instance& inst, double h = 1e-5, double floor = 1e-6) {
  const auto analytic = vbll::loss_gradients(inst.params, inst.E, inst.y, inst.beta, inst.noise,
                                             inst.opts)
                            .grad;
  auto f = [&] {
    return vbll::elbo_loss(inst.params, inst.E, inst.y, inst.beta, inst.noise, inst.opts).loss;
  };
  Result r;
  auto run = [&](std::vector<double>& theta, const std::vector<double>& g) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double num = oracle::central_difference(f, theta[j], h);
      const double den = std::max({std::fabs(g[j]), std::fabs(num), floor});
      r.worst_rel = std::max(r.worst_rel, std::fabs(g[j] - num) / den);
      ++r.coordinates;
    }
  };
  run(inst.params.w_mu, analytic.w_mu);
  run(inst.params.w_logvar, analytic.w_logvar);
  run(inst.params.b_mu, analytic.b_mu);
  run(inst.params.b_logvar, analytic.b_logvar);
  return r;
}

}  // namespace gradcheck
