#pragma once

// Variational Bayesian last layer: a linear softmax head whose weights and
// biases carry diagonal Gaussian posteriors N(mu, exp(logvar)).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vbll/config.hpp"
#include "vbll/matrix.hpp"

namespace vbll {

using Rng = std::mt19937_64;

inline constexpr std::size_t kNumClasses = 2;
inline constexpr double kLogvarMin = -30.0;
inline constexpr double kLogvarMax = 10.0;

// Weight tensors are C x H row-major. Gradients share this layout.
struct VBLLParams {
  std::size_t n_classes = kNumClasses;
  std::size_t in_dim = 0;
  std::vector<double> w_mu;
  std::vector<double> w_logvar;
  std::vector<double> b_mu;
  std::vector<double> b_logvar;

  static VBLLParams zeros(std::size_t in_dim, std::size_t n_classes = kNumClasses);

  // Visits (w_mu, w_logvar, b_mu, b_logvar) in that order.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(w_mu);
    f(w_logvar);
    f(b_mu);
    f(b_logvar);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(w_mu);
    f(w_logvar);
    f(b_mu);
    f(b_logvar);
  }

  bool operator==(const VBLLParams&) const = default;
};

using ParamGradients = VBLLParams;

struct WeightSample {
  Matrix W;               // C x H
  std::vector<double> b;  // C
};

// Standard-normal draws for S weight samples, laid out sample-major.
struct NoiseDraws {
  std::size_t samples = 0;
  std::vector<double> w;  // S * C * H
  std::vector<double> b;  // S * C

  std::span<const double> w_at(std::size_t s, std::size_t per_sample) const {
    return {w.data() + s * per_sample, per_sample};
  }
};

NoiseDraws draw_noise(const VBLLParams& p, std::size_t samples, Rng& rng,
                      NoiseMode mode = NoiseMode::sampled);

VBLLParams init_params(std::size_t in_dim, std::size_t n_classes, double init_logvar,
                       double weight_mu_coef, std::uint64_t seed);

void clamp_logvars(VBLLParams& p);

// w = mu + exp(logvar/2) * eps
WeightSample sample_weights(const VBLLParams& p, std::span<const double> eps_w,
                            std::span<const double> eps_b);
WeightSample sample_weights(const VBLLParams& p, Rng& rng);

// W x + b
std::vector<double> forward_logits(const WeightSample& s, std::span<const double> x);

// Sum over every weight and bias coordinate of
// 0.5 * (mu^2 + exp(logvar) - logvar - 1).
double kl_to_standard_normal(const VBLLParams& p);

struct ElboTerms {
  double loss = 0.0;
  double ce_term = 0.0;  // mean softmax cross-entropy over samples and rows
  double kl_term = 0.0;  // KL / n_train
};

struct ElboOptions {
  // KL normalizer; 0 means the number of batch rows.
  std::size_t n_train = 0;
  // false drops the cross-entropy term (KL-only objective, used in tests).
  bool data_term = true;
};

struct ElboGradient {
  ElboTerms terms;
  ParamGradients grad;
};

ElboTerms elbo_loss(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                    double beta, const NoiseDraws& noise, ElboOptions opts = {});
ElboTerms elbo_loss(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                    double beta, std::size_t samples, Rng& rng, ElboOptions opts = {});

// Analytic gradients of elbo_loss with respect to all four tensors, for the
// same noise draws.
ElboGradient loss_gradients(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                            double beta, const NoiseDraws& noise, ElboOptions opts = {});
ElboGradient loss_gradients(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                            double beta, std::size_t samples, Rng& rng,
                            ElboOptions opts = {});

// Mean over `samples` posterior draws of softmax(W x + b); N x C.
Matrix predictive_probs(const VBLLParams& p, const Matrix& E, std::size_t samples, Rng& rng);

// softmax(W_mu x + b_mu); N x C.
Matrix map_predictive(const VBLLParams& p, const Matrix& E);

}  // namespace vbll
