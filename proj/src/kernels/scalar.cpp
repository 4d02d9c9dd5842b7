#include <cmath>

#include "vbll/kernels.hpp"

namespace vbll::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void reparam_scalar(const double* mu, const double* sigma, const double* eps,
                    double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = mu[i] + sigma[i] * eps[i];
}

void standardize_scalar(const double* x, const double* mean, const double* sd,
                        double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean[i]) / sd[i];
}

void adam_scalar(double* theta, double* m, double* v, const double* g,
                 std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    theta[i] = theta[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",          dot_scalar,  axpy_scalar,
                                 reparam_scalar,    standardize_scalar,
                                 adam_scalar};
  return table;
}

}  // namespace vbll::kernels
