#pragma once

// Data-parallel inner loops used by the head, the optimizer and the scaler.
//
// Every kernel has a scalar reference implementation. SIMD variants (AVX2 on
// x86-64, NEON on aarch64) are compiled when the target allows and selected at
// runtime. Elementwise kernels round exactly like the scalar path (no FMA
// contraction); the dot product differs only in summation order.
//
// The active backend can be forced with VBLL_KERNELS=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vbll::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = mu[i] + sigma[i] * eps[i]
  void (*reparam)(const double* mu, const double* sigma, const double* eps,
                  double* out, std::size_t n);
  // out[i] = (x[i] - mean[i]) / sd[i]
  void (*standardize)(const double* x, const double* mean, const double* sd,
                      double* out, std::size_t n);
  // One bias-corrected Adam update over a flat tensor.
  void (*adam)(double* theta, double* m, double* v, const double* g,
               std::size_t n, const AdamCoeffs& c);
};

const KernelTable& scalar_table();
// nullptr when the backend is not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Backend used by the library. Resolved once, on first call.
const KernelTable& active();

// Every backend usable on this machine, scalar first.
std::vector<const KernelTable*> available();

// Overrides the active backend; returns false if `name` is unavailable.
// Not thread-safe with respect to concurrent kernel calls.
bool select(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace vbll::kernels
