#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradient_check.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "vbll/error.hpp"
#include "vbll/model_io.hpp"
#include "vbll/vbll_head.hpp"

using namespace vbll;

TEST_CASE("init_params shapes, log-variances and scaled means") {
  const auto p = init_params(5, 2, -3.0, 0.01, 9);
  CHECK(p.w_mu.size() == 10);
  CHECK(p.b_mu.size() == 2);
  for (double v : p.w_logvar) CHECK(v == -3.0);
  for (double v : p.b_logvar) CHECK(v == -3.0);
  for (double v : p.w_mu) CHECK(std::fabs(v) < 0.06);
  CHECK(p == init_params(5, 2, -3.0, 0.01, 9));
  CHECK_FALSE(p == init_params(5, 2, -3.0, 0.01, 10));

  const auto zero_coef = init_params(3, 2, -2.0, 0.0, 1);
  for (double v : zero_coef.w_mu) CHECK(v == 0.0);

  CHECK_THROWS_AS(init_params(0, 2, -2.0, 0.01, 1), InvalidArgument);
  CHECK_THROWS_AS(init_params(3, 3, -2.0, 0.01, 1), InvalidArgument);
  CHECK(init_params(2, 2, -100.0, 0.01, 1).w_logvar[0] == kLogvarMin);
}

TEST_CASE("logits and sample with zero log-variance and zero noise") {
  auto p = VBLLParams::zeros(2);
  p.w_mu = {1.0, 2.0, -1.0, 0.5};
  p.b_mu = {0.5, -0.5};
  const std::vector<double> ew(4, 0.0), eb(2, 0.0);
  const auto s = sample_weights(p, ew, eb);
  CHECK(s.W.data == p.w_mu);
  const std::vector<double> x{1.0, 1.0};
  CHECK(forward_logits(s, x) == std::vector<double>{3.5, -1.0});
  const std::vector<double> bad{1.0};
  CHECK_THROWS_WITH_AS(forward_logits(s, bad), doctest::Contains("1 features"), InvalidArgument);
}

TEST_CASE("reparameterized draws have the posterior mean and variance") {
  auto p = VBLLParams::zeros(2);
  p.w_mu = {0.3, -1.0, 2.0, 0.0};
  p.w_logvar = {-2.0, 0.0, -4.0, 1.0};
  p.b_mu = {0.1, -0.1};
  p.b_logvar = {-1.0, -3.0};
  Rng rng(123);
  const std::size_t n = 100000;
  std::vector<double> sum(4, 0.0), sq(4, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto s = sample_weights(p, rng);
    for (std::size_t j = 0; j < 4; ++j) {
      sum[j] += s.W.data[j];
      sq[j] += s.W.data[j] * s.W.data[j];
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const double var = std::exp(p.w_logvar[j]);
    const double mean = sum[j] / static_cast<double>(n);
    const double emp_var = sq[j] / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean - p.w_mu[j]) < 4.0 * std::sqrt(var / static_cast<double>(n)));
    CHECK(emp_var == doctest::Approx(var).epsilon(0.02));
  }
}

TEST_CASE("KL examples") {
  const auto zero = VBLLParams::zeros(3);
  CHECK(kl_to_standard_normal(zero) == 0.0);

  auto p = VBLLParams::zeros(1);
  p.w_mu = {1.0, 0.0};
  CHECK(kl_to_standard_normal(p) == doctest::Approx(0.5));
  p.w_mu = {0.0, 0.0};
  p.w_logvar = {std::log(2.0), 0.0};
  CHECK(kl_to_standard_normal(p) == doctest::Approx(0.5 * (2.0 - std::log(2.0) - 1.0)));
}

TEST_CASE("KL matches a Monte-Carlo estimate") {
  auto p = VBLLParams::zeros(2);
  p.w_mu = {0.5, -1.0, 0.2, 0.0};
  p.w_logvar = {-1.0, 0.5, -2.0, 0.0};
  p.b_mu = {1.0, 0.0};
  p.b_logvar = {0.0, -0.5};
  std::vector<double> mu, lv;
  mu.insert(mu.end(), p.w_mu.begin(), p.w_mu.end());
  mu.insert(mu.end(), p.b_mu.begin(), p.b_mu.end());
  lv.insert(lv.end(), p.w_logvar.begin(), p.w_logvar.end());
  lv.insert(lv.end(), p.b_logvar.begin(), p.b_logvar.end());
  const auto est = oracle::kl_monte_carlo(mu, lv, 200000, 77);
  CHECK(std::fabs(est.mean - kl_to_standard_normal(p)) < 3.0 * est.se);
}

TEST_CASE("loss decomposes into cross-entropy plus scaled KL") {
  auto inst = gradcheck::random_instance(3, 3, 4, 2);
  inst.beta = 0.25;
  inst.opts.n_train = 40;
  const auto t = elbo_loss(inst.params, inst.E, inst.y, inst.beta, inst.noise, inst.opts);
  CHECK(t.kl_term == doctest::Approx(kl_to_standard_normal(inst.params) / 40.0));
  CHECK(t.loss == doctest::Approx(t.ce_term + 0.25 * t.kl_term));

  const auto no_kl = elbo_loss(inst.params, inst.E, inst.y, 0.0, inst.noise, inst.opts);
  CHECK(no_kl.loss == no_kl.ce_term);

  ElboOptions kl_only = inst.opts;
  kl_only.data_term = false;
  const auto k = elbo_loss(inst.params, inst.E, inst.y, 1.0, inst.noise, kl_only);
  CHECK(k.ce_term == 0.0);
  CHECK(k.loss == doctest::Approx(kl_to_standard_normal(inst.params) / 40.0));
}

TEST_CASE("cross-entropy with a single zero-noise sample equals the softmax regression loss") {
  auto p = VBLLParams::zeros(2);
  p.w_mu = {0.4, -0.3, -0.2, 0.7};
  p.b_mu = {0.05, -0.05};
  Matrix E(3, 2);
  E.data = {1.0, 2.0, -1.0, 0.5, 0.0, -2.0};
  const std::vector<int> y{1, 0, 1};
  Rng rng(1);
  const auto noise = draw_noise(p, 1, rng, NoiseMode::zero);
  const auto t = elbo_loss(p, E, y, 0.0, noise);

  oracle::SoftmaxRegression ref{2, p.w_mu, p.b_mu};
  double ce = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto probs = ref.probs({E(i, 0), E(i, 1)});
    ce -= std::log(probs[static_cast<std::size_t>(y[i])]);
  }
  CHECK(t.ce_term == doctest::Approx(ce / 3.0).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences on a 4x3 toy problem") {
  auto inst = gradcheck::random_instance(17, 3, 4, 3);
  const auto r = gradcheck::compare(inst);
  CHECK(r.coordinates == 2 * 3 * 2 + 2 * 2);
  CHECK(r.worst_rel < 1e-4);
}

TEST_CASE("gradient check across random instances") {
  for (std::uint64_t seed = 100; seed < 112; ++seed) {
    auto inst = gradcheck::random_instance(seed, 1 + seed % 5, 1 + seed % 8, 1 + seed % 4);
    CAPTURE(seed);
    CHECK(gradcheck::compare(inst).worst_rel < 1e-4);
  }
}

TEST_CASE("loss rejects bad inputs") {
  auto inst = gradcheck::random_instance(5, 3, 4, 1);
  CHECK_THROWS_AS(elbo_loss(inst.params, inst.E, inst.y, 1.5, inst.noise), InvalidArgument);
  CHECK_THROWS_AS(elbo_loss(inst.params, inst.E, inst.y, -0.1, inst.noise), InvalidArgument);
  std::vector<int> bad_y = inst.y;
  bad_y[0] = 2;
  CHECK_THROWS_WITH_AS(elbo_loss(inst.params, inst.E, bad_y, 0.5, inst.noise),
                       doctest::Contains("label"), InvalidArgument);
  Matrix wrong(4, 2);
  CHECK_THROWS_AS(elbo_loss(inst.params, wrong, inst.y, 0.5, inst.noise), InvalidArgument);
  Rng rng(1);
  CHECK_THROWS_AS(elbo_loss(inst.params, inst.E, inst.y, 0.5, 0, rng), InvalidArgument);
}

TEST_CASE("predictive probabilities are normalized, and equal the MAP softmax at tiny variance") {
  auto p = init_params(3, 2, -30.0, 0.5, 4);
  Matrix E(5, 3);
  Rng data_rng(8);
  std::normal_distribution<double> normal;
  for (auto& v : E.data) v = normal(data_rng);
  Rng rng(2);
  const auto mc = predictive_probs(p, E, 10, rng);
  const auto map = map_predictive(p, E);
  for (std::size_t i = 0; i < E.rows; ++i) {
    CHECK(mc(i, 0) + mc(i, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mc(i, 1) == doctest::Approx(map(i, 1)).epsilon(1e-5));
  }
}

TEST_CASE("Monte-Carlo predictive converges to a large-sample oracle") {
  auto p = VBLLParams::zeros(3);
  p.w_mu = {0.5, -0.2, 0.1, -0.4, 0.3, 0.2};
  p.w_logvar = {-1.0, -0.5, -2.0, 0.0, -1.5, -1.0};
  p.b_mu = {0.1, -0.2};
  p.b_logvar = {-2.0, -2.0};
  Matrix E(4, 3);
  E.data = {1, 0, -1, 0.5, 0.5, 0.5, -1, 2, 0, 0, 0, 1};

  Rng rng(5);
  const std::size_t s_eval = 10000;
  const auto mc = predictive_probs(p, E, s_eval, rng);

  // Oracle: direct sampling of each logit difference.
  std::mt19937_64 orng(999);
  std::normal_distribution<double> normal;
  const std::size_t n_oracle = 1000000;
  for (std::size_t i = 0; i < E.rows; ++i) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < n_oracle; ++k) {
      double z[2];
      for (std::size_t c = 0; c < 2; ++c) {
        z[c] = p.b_mu[c] + std::exp(0.5 * p.b_logvar[c]) * normal(orng);
        for (std::size_t j = 0; j < 3; ++j) {
          const std::size_t q = c * 3 + j;
          z[c] += (p.w_mu[q] + std::exp(0.5 * p.w_logvar[q]) * normal(orng)) * E(i, j);
        }
      }
      const double p1 = 1.0 / (1.0 + std::exp(z[0] - z[1]));
      sum += p1;
      sq += p1 * p1;
    }
    const double mean = sum / static_cast<double>(n_oracle);
    const double sd = std::sqrt(sq / static_cast<double>(n_oracle) - mean * mean);
    CAPTURE(i);
    CHECK(std::fabs(mc(i, 1) - mean) < 4.0 * sd / std::sqrt(static_cast<double>(s_eval)));
  }
}

TEST_CASE("model file round trip") {
  testutil::TempDir dir;
  TrainedModel m{init_params(4, 2, -2.5, 0.05, 3), TrainConfig{}};
  m.config.id = "C3";
  m.config.fixed_beta = 0.25;
  save_model(m, dir / "m.vblm");
  const auto back = load_model(dir / "m.vblm");
  CHECK(back.params == m.params);
  CHECK(back.config == m.config);

  testutil::write_file(dir / "bad.vblm", "VBLX0000");
  CHECK_THROWS_AS(load_model(dir / "bad.vblm"), FormatError);
  auto bytes = testutil::read_file(dir / "m.vblm");
  testutil::write_file(dir / "short.vblm", bytes.substr(0, 40));
  CHECK_THROWS_WITH_AS(load_model(dir / "short.vblm"), doctest::Contains("truncated"),
                       FormatError);
}
