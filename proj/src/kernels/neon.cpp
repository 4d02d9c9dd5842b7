// NEON variants for aarch64. vfmaq is avoided so that the elementwise
// kernels round exactly like the scalar reference.

#include <arm_neon.h>

#include <cmath>

#include "vbll/kernels.hpp"

namespace vbll::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  const float64x2_t acc = vaddq_f64(acc0, acc1);
  double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void reparam_neon(const double* mu, const double* sigma, const double* eps,
                  double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(mu + i),
                                 vmulq_f64(vld1q_f64(sigma + i), vld1q_f64(eps + i))));
  }
  for (; i < n; ++i) out[i] = mu[i] + sigma[i] * eps[i];
}

void standardize_neon(const double* x, const double* mean, const double* sd,
                      double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vdivq_f64(vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i)),
                                 vld1q_f64(sd + i)));
  }
  for (; i < n; ++i) out[i] = (x[i] - mean[i]) / sd[i];
}

void adam_neon(double* theta, double* m, double* v, const double* g,
               std::size_t n, const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const float64x2_t b1 = vdupq_n_f64(c.beta1);
  const float64x2_t b2 = vdupq_n_f64(c.beta2);
  const float64x2_t nb1 = vdupq_n_f64(one_minus_b1);
  const float64x2_t nb2 = vdupq_n_f64(one_minus_b2);
  const float64x2_t bias1 = vdupq_n_f64(c.bias1);
  const float64x2_t bias2 = vdupq_n_f64(c.bias2);
  const float64x2_t lr = vdupq_n_f64(c.lr);
  const float64x2_t eps = vdupq_n_f64(c.eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vg = vld1q_f64(g + i);
    const float64x2_t vm = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(nb1, vg));
    const float64x2_t vv =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(nb2, vmulq_f64(vg, vg)));
    vst1q_f64(m + i, vm);
    vst1q_f64(v + i, vv);
    const float64x2_t step =
        vdivq_f64(vmulq_f64(lr, vdivq_f64(vm, bias1)),
                  vaddq_f64(vsqrtq_f64(vdivq_f64(vv, bias2)), eps));
    vst1q_f64(theta + i, vsubq_f64(vld1q_f64(theta + i), step));
  }
  for (; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    theta[i] = theta[i] - (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable* neon_table_impl() {
  static const KernelTable table{"neon",        dot_neon,         axpy_neon,
                                 reparam_neon,  standardize_neon, adam_neon};
  return &table;
}

}  // namespace vbll::kernels
