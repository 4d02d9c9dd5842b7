#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "vbll/kernels.hpp"

using vbll::kernels::KernelTable;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 30, 31, 64, 67, 129};

}  // namespace

TEST_CASE("scalar backend is always available and listed first") {
  const auto all = vbll::kernels::available();
  REQUIRE_FALSE(all.empty());
  CHECK(std::string(all.front()->name) == "scalar");
  CHECK(vbll::kernels::select("scalar"));
  CHECK(std::string(vbll::kernels::active().name) == "scalar");
  CHECK_FALSE(vbll::kernels::select("no-such-backend"));
  CHECK(vbll::kernels::select(all.back()->name));
}

TEST_CASE("elementwise kernels match the scalar reference bit-for-bit") {
  const KernelTable& ref = vbll::kernels::scalar_table();
  std::mt19937_64 rng(7);
  for (const KernelTable* k : vbll::kernels::available()) {
    CAPTURE(k->name);
    for (std::size_t n : kSizes) {
      CAPTURE(n);
      const auto x = random_vec(rng, n, -3, 3);
      const auto mu = random_vec(rng, n, -1, 1);
      const auto sigma = random_vec(rng, n, 1e-6, 2);
      const auto eps = random_vec(rng, n, -4, 4);
      const auto mean = random_vec(rng, n, -2, 2);
      const auto sd = random_vec(rng, n, 0.1, 5);

      auto y_ref = random_vec(rng, n, -1, 1);
      auto y_k = y_ref;
      ref.axpy(0.37, x.data(), y_ref.data(), n);
      k->axpy(0.37, x.data(), y_k.data(), n);
      CHECK(bit_equal(y_ref, y_k));

      std::vector<double> r_ref(n), r_k(n);
      ref.reparam(mu.data(), sigma.data(), eps.data(), r_ref.data(), n);
      k->reparam(mu.data(), sigma.data(), eps.data(), r_k.data(), n);
      CHECK(bit_equal(r_ref, r_k));

      std::vector<double> s_ref(n), s_k(n);
      ref.standardize(x.data(), mean.data(), sd.data(), s_ref.data(), n);
      k->standardize(x.data(), mean.data(), sd.data(), s_k.data(), n);
      CHECK(bit_equal(s_ref, s_k));

      auto th_ref = random_vec(rng, n, -1, 1);
      auto m_ref = random_vec(rng, n, -0.1, 0.1);
      auto v_ref = random_vec(rng, n, 0, 0.01);
      auto th_k = th_ref, m_k = m_ref, v_k = v_ref;
      const auto g = random_vec(rng, n, -1, 1);
      const vbll::kernels::AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 1 - std::pow(0.9, 3),
                                        1 - std::pow(0.999, 3)};
      ref.adam(th_ref.data(), m_ref.data(), v_ref.data(), g.data(), n, c);
      k->adam(th_k.data(), m_k.data(), v_k.data(), g.data(), n, c);
      CHECK(bit_equal(th_ref, th_k));
      CHECK(bit_equal(m_ref, m_k));
      CHECK(bit_equal(v_ref, v_k));
    }
  }
}

TEST_CASE("dot product agrees with the scalar reference up to summation order") {
  const KernelTable& ref = vbll::kernels::scalar_table();
  std::mt19937_64 rng(11);
  for (const KernelTable* k : vbll::kernels::available()) {
    CAPTURE(k->name);
    for (std::size_t n : kSizes) {
      const auto a = random_vec(rng, n, -5, 5);
      const auto b = random_vec(rng, n, -5, 5);
      double magnitude = 0.0;
      for (std::size_t i = 0; i < n; ++i) magnitude += std::fabs(a[i] * b[i]);
      const double expect = ref.dot(a.data(), b.data(), n);
      const double got = k->dot(a.data(), b.data(), n);
      CHECK(std::fabs(expect - got) <= 1e-15 * (magnitude + 1.0) * static_cast<double>(n + 1));
    }
  }
}

TEST_CASE("dot of small integers is exact on every backend") {
  std::vector<double> a(37), b(37);
  double expect = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<double>(i % 7) - 3.0;
    b[i] = static_cast<double>(i % 5) + 1.0;
    expect += a[i] * b[i];
  }
  for (const KernelTable* k : vbll::kernels::available()) {
    CAPTURE(k->name);
    CHECK(k->dot(a.data(), b.data(), a.size()) == expect);
  }
}

TEST_CASE("adam kernel with zero gradient from a fresh state is a no-op") {
  for (const KernelTable* k : vbll::kernels::available()) {
    std::vector<double> theta{0.1, -2.5, 3e-7, 1e9, -0.0};
    const auto before = theta;
    std::vector<double> m(5, 0.0), v(5, 0.0), g(5, 0.0);
    const vbll::kernels::AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001};
    k->adam(theta.data(), m.data(), v.data(), g.data(), theta.size(), c);
    CHECK(bit_equal(theta, before));
  }
}
