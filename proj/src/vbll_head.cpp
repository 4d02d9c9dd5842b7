#include "vbll/vbll_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vbll/error.hpp"
#include "vbll/kernels.hpp"

namespace vbll {

VBLLParams VBLLParams::zeros(std::size_t in_dim, std::size_t n_classes) {
  VBLLParams p;
  p.n_classes = n_classes;
  p.in_dim = in_dim;
  p.w_mu.assign(n_classes * in_dim, 0.0);
  p.w_logvar.assign(n_classes * in_dim, 0.0);
  p.b_mu.assign(n_classes, 0.0);
  p.b_logvar.assign(n_classes, 0.0);
  return p;
}

NoiseDraws draw_noise(const VBLLParams& p, std::size_t samples, Rng& rng, NoiseMode mode) {
  NoiseDraws d;
  d.samples = samples;
  d.w.assign(samples * p.w_mu.size(), 0.0);
  d.b.assign(samples * p.b_mu.size(), 0.0);
  if (mode == NoiseMode::sampled) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t i = 0; i < p.w_mu.size(); ++i) d.w[s * p.w_mu.size() + i] = normal(rng);
      for (std::size_t i = 0; i < p.b_mu.size(); ++i) d.b[s * p.b_mu.size() + i] = normal(rng);
    }
  }
  return d;
}

VBLLParams init_params(std::size_t in_dim, std::size_t n_classes, double init_logvar,
                       double weight_mu_coef, std::uint64_t seed) {
  if (in_dim == 0) throw InvalidArgument("init_params: in_dim must be >= 1");
  if (n_classes != kNumClasses) throw InvalidArgument("init_params: only 2 classes supported");
  if (!std::isfinite(init_logvar) || !std::isfinite(weight_mu_coef)) {
    throw InvalidArgument("init_params: non-finite hyperparameter");
  }
  VBLLParams p = VBLLParams::zeros(in_dim, n_classes);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& w : p.w_mu) w = weight_mu_coef * normal(rng);
  for (auto& b : p.b_mu) b = weight_mu_coef * normal(rng);
  std::fill(p.w_logvar.begin(), p.w_logvar.end(), init_logvar);
  std::fill(p.b_logvar.begin(), p.b_logvar.end(), init_logvar);
  clamp_logvars(p);
  return p;
}

void clamp_logvars(VBLLParams& p) {
  for (auto* t : {&p.w_logvar, &p.b_logvar}) {
    for (auto& v : *t) v = std::clamp(v, kLogvarMin, kLogvarMax);
  }
}

namespace {

std::vector<double> sigmas(const std::vector<double>& logvar) {
  std::vector<double> out(logvar.size());
  for (std::size_t i = 0; i < logvar.size(); ++i) out[i] = std::exp(0.5 * logvar[i]);
  return out;
}

void check_batch(const VBLLParams& p, const Matrix& E, std::span<const int> y) {
  if (E.rows == 0) throw InvalidArgument("empty batch");
  if (E.cols != p.in_dim) {
    throw InvalidArgument("feature dimension " + std::to_string(E.cols) +
                          " does not match head input " + std::to_string(p.in_dim));
  }
  if (y.size() != E.rows) throw InvalidArgument("labels and features are not aligned");
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= p.n_classes) {
      throw InvalidArgument("label out of range: " + std::to_string(label));
    }
  }
}

// Writes softmax(z) into probs and returns log-sum-exp(z).
double softmax_into(std::span<const double> z, std::span<double> probs) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    probs[c] = std::exp(z[c] - zmax);
    total += probs[c];
  }
  for (auto& v : probs) v /= total;
  return zmax + std::log(total);
}

void logits_into(const WeightSample& s, std::span<const double> x, std::span<double> z) {
  const auto& k = kernels::active();
  for (std::size_t c = 0; c < s.W.rows; ++c) {
    z[c] = k.dot(s.W.row(c).data(), x.data(), x.size()) + s.b[c];
  }
}

// Shared forward/backward pass over fixed noise.
ElboGradient evaluate(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                      double beta, const NoiseDraws& noise, const ElboOptions& opts,
                      bool want_grad) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0,1]");
  if (noise.samples == 0) throw InvalidArgument("at least one weight sample is required");
  if (opts.data_term) check_batch(p, E, y);
  const std::size_t n_train = opts.n_train != 0 ? opts.n_train : E.rows;
  if (n_train == 0) throw InvalidArgument("empty batch");

  const std::size_t C = p.n_classes;
  const std::size_t H = p.in_dim;
  const std::size_t per_w = C * H;
  const auto& k = kernels::active();

  ElboGradient out;
  if (want_grad) out.grad = VBLLParams::zeros(H, C);

  if (opts.data_term) {
    const auto sig_w = sigmas(p.w_logvar);
    const auto sig_b = sigmas(p.b_logvar);
    const double scale = 1.0 / (static_cast<double>(noise.samples) * static_cast<double>(E.rows));
    std::vector<double> z(C), probs(C);
    Matrix gW(C, H);
    std::vector<double> gb(C);
    double ce_sum = 0.0;
    for (std::size_t s = 0; s < noise.samples; ++s) {
      const auto eps_w = noise.w_at(s, per_w);
      const std::span<const double> eps_b(noise.b.data() + s * C, C);
      const WeightSample ws = sample_weights(p, eps_w, eps_b);
      if (want_grad) {
        std::fill(gW.data.begin(), gW.data.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
      }
      double ce_sample = 0.0;
      for (std::size_t i = 0; i < E.rows; ++i) {
        const auto x = E.row(i);
        logits_into(ws, x, z);
        const double lse = softmax_into(z, probs);
        const auto label = static_cast<std::size_t>(y[i]);
        ce_sample += lse - z[label];
        if (want_grad) {
          for (std::size_t c = 0; c < C; ++c) {
            const double delta = (probs[c] - (c == label ? 1.0 : 0.0)) * scale;
            k.axpy(delta, x.data(), gW.row(c).data(), H);
            gb[c] += delta;
          }
        }
      }
      ce_sum += ce_sample;
      if (want_grad) {
        // dw/dmu = 1, dw/dlogvar = 0.5 * sigma * eps
        for (std::size_t j = 0; j < per_w; ++j) {
          out.grad.w_mu[j] += gW.data[j];
          out.grad.w_logvar[j] += gW.data[j] * 0.5 * sig_w[j] * eps_w[j];
        }
        for (std::size_t c = 0; c < C; ++c) {
          out.grad.b_mu[c] += gb[c];
          out.grad.b_logvar[c] += gb[c] * 0.5 * sig_b[c] * eps_b[c];
        }
      }
    }
    out.terms.ce_term = ce_sum * scale;
  }

  out.terms.kl_term = kl_to_standard_normal(p) / static_cast<double>(n_train);
  out.terms.loss = out.terms.ce_term + beta * out.terms.kl_term;

  if (want_grad && beta != 0.0) {
    const double kl_scale = beta / static_cast<double>(n_train);
    auto add_kl = [kl_scale](const std::vector<double>& mu, const std::vector<double>& lv,
                             std::vector<double>& g_mu, std::vector<double>& g_lv) {
      for (std::size_t j = 0; j < mu.size(); ++j) {
        g_mu[j] += kl_scale * mu[j];
        g_lv[j] += kl_scale * 0.5 * (std::exp(lv[j]) - 1.0);
      }
    };
    add_kl(p.w_mu, p.w_logvar, out.grad.w_mu, out.grad.w_logvar);
    add_kl(p.b_mu, p.b_logvar, out.grad.b_mu, out.grad.b_logvar);
  }
  return out;
}

}  // namespace

WeightSample sample_weights(const VBLLParams& p, std::span<const double> eps_w,
                            std::span<const double> eps_b) {
  if (eps_w.size() != p.w_mu.size() || eps_b.size() != p.b_mu.size()) {
    throw InvalidArgument("sample_weights: noise shape mismatch");
  }
  const auto& k = kernels::active();
  WeightSample s{Matrix(p.n_classes, p.in_dim), std::vector<double>(p.n_classes)};
  const auto sig_w = sigmas(p.w_logvar);
  const auto sig_b = sigmas(p.b_logvar);
  k.reparam(p.w_mu.data(), sig_w.data(), eps_w.data(), s.W.data.data(), p.w_mu.size());
  k.reparam(p.b_mu.data(), sig_b.data(), eps_b.data(), s.b.data(), p.b_mu.size());
  return s;
}

WeightSample sample_weights(const VBLLParams& p, Rng& rng) {
  const NoiseDraws d = draw_noise(p, 1, rng);
  return sample_weights(p, d.w, d.b);
}

std::vector<double> forward_logits(const WeightSample& s, std::span<const double> x) {
  if (x.size() != s.W.cols) {
    throw InvalidArgument("forward_logits: input has " + std::to_string(x.size()) +
                          " features, weights expect " + std::to_string(s.W.cols));
  }
  std::vector<double> z(s.W.rows);
  logits_into(s, x, z);
  return z;
}

double kl_to_standard_normal(const VBLLParams& p) {
  double total = 0.0;
  auto accumulate = [&total](const std::vector<double>& mu, const std::vector<double>& lv) {
    for (std::size_t j = 0; j < mu.size(); ++j) {
      total += 0.5 * (mu[j] * mu[j] + std::exp(lv[j]) - lv[j] - 1.0);
    }
  };
  accumulate(p.w_mu, p.w_logvar);
  accumulate(p.b_mu, p.b_logvar);
  return total;
}

ElboTerms elbo_loss(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                    double beta, const NoiseDraws& noise, ElboOptions opts) {
  return evaluate(p, E, y, beta, noise, opts, false).terms;
}

ElboTerms elbo_loss(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                    double beta, std::size_t samples, Rng& rng, ElboOptions opts) {
  if (samples == 0) throw InvalidArgument("at least one weight sample is required");
  return elbo_loss(p, E, y, beta, draw_noise(p, samples, rng), opts);
}

ElboGradient loss_gradients(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                            double beta, const NoiseDraws& noise, ElboOptions opts) {
  return evaluate(p, E, y, beta, noise, opts, true);
}

ElboGradient loss_gradients(const VBLLParams& p, const Matrix& E, std::span<const int> y,
                            double beta, std::size_t samples, Rng& rng, ElboOptions opts) {
  if (samples == 0) throw InvalidArgument("at least one weight sample is required");
  return loss_gradients(p, E, y, beta, draw_noise(p, samples, rng), opts);
}

Matrix predictive_probs(const VBLLParams& p, const Matrix& E, std::size_t samples, Rng& rng) {
  if (samples == 0) throw InvalidArgument("predictive_probs: samples must be >= 1");
  if (E.cols != p.in_dim) throw InvalidArgument("predictive_probs: dimension mismatch");
  const std::size_t C = p.n_classes;
  Matrix out(E.rows, C);
  std::vector<double> z(C), probs(C);
  for (std::size_t s = 0; s < samples; ++s) {
    const WeightSample ws = sample_weights(p, rng);
    for (std::size_t i = 0; i < E.rows; ++i) {
      logits_into(ws, E.row(i), z);
      softmax_into(z, probs);
      auto dst = out.row(i);
      for (std::size_t c = 0; c < C; ++c) dst[c] += probs[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(samples);
  for (auto& v : out.data) v *= inv;
  return out;
}

Matrix map_predictive(const VBLLParams& p, const Matrix& E) {
  if (E.cols != p.in_dim) {
    throw InvalidArgument("map_predictive: input has " + std::to_string(E.cols) +
                          " features, head expects " + std::to_string(p.in_dim));
  }
  WeightSample mean{Matrix(p.n_classes, p.in_dim), p.b_mu};
  mean.W.data = p.w_mu;
  Matrix out(E.rows, p.n_classes);
  std::vector<double> z(p.n_classes);
  for (std::size_t i = 0; i < E.rows; ++i) {
    logits_into(mean, E.row(i), z);
    softmax_into(z, out.row(i));
  }
  return out;
}

}  // namespace vbll
