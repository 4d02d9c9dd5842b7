#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vbll/error.hpp"
#include "vbll/optim.hpp"

using namespace vbll;

namespace {

// Two well separated Gaussian blobs.
void separable_toy(Matrix& E, std::vector<int>& y, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  E = Matrix(n, 2);
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double c = label == 1 ? 2.0 : -2.0;
    E(i, 0) = c + normal(rng);
    E(i, 1) = -0.5 * c + normal(rng);
    y.push_back(label);
  }
}

}  // namespace

TEST_CASE("anneal_beta examples") {
  const AnnealSchedule lin{KlMode::linear, 50};
  const AnnealSchedule cos{KlMode::cosine, 50};
  CHECK(anneal_beta(lin, 0) == 0.0);
  CHECK(anneal_beta(lin, 50) == 1.0);
  CHECK(anneal_beta(lin, 10) == doctest::Approx(0.2));
  CHECK(anneal_beta(cos, 0) == 0.0);
  CHECK(anneal_beta(cos, 50) == 1.0);
  CHECK(std::fabs(anneal_beta(cos, 25) - 0.5) < 1e-12);
  const AnnealSchedule cos100{KlMode::cosine, 100};
  CHECK(anneal_beta(cos100, 25) == doctest::Approx(0.5 * (1.0 - std::cos(std::numbers::pi / 4))));
  CHECK(anneal_beta(cos100, 25) == doctest::Approx(0.14645).epsilon(1e-4));
  CHECK_THROWS_AS(anneal_beta(lin, 51), InvalidArgument);
}

TEST_CASE("annealing is bounded and monotone for both modes and many lengths") {
  for (KlMode mode : {KlMode::linear, KlMode::cosine}) {
    for (unsigned T : {1u, 2u, 3u, 7u, 50u, 333u}) {
      const AnnealSchedule s{mode, T};
      double prev = anneal_beta(s, 0);
      CHECK(prev == 0.0);
      for (unsigned t = 1; t <= T; ++t) {
        const double b = anneal_beta(s, t);
        CHECK(b >= prev);
        CHECK(b <= 1.0);
        prev = b;
      }
      CHECK(prev == 1.0);
    }
  }
}

TEST_CASE("first Adam step on a scalar gradient") {
  auto p = VBLLParams::zeros(1);
  auto g = VBLLParams::zeros(1);
  g.w_mu[0] = 0.1;
  auto state = AdamState::for_params(p, 1e-3);
  adam_step(state, p, g);
  CHECK(state.t == 1);
  // m_hat = g, v_hat = g^2, so the update is -lr * g / (|g| + eps).
  const double expect = -1e-3 * 0.1 / (0.1 + 1e-8);
  CHECK(p.w_mu[0] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p.w_mu[0] == doctest::Approx(-9.99999e-4).epsilon(1e-6));
  CHECK(p.w_mu[1] == 0.0);
  CHECK(p.b_logvar[0] == 0.0);
}

TEST_CASE("Adam matches a hand-rolled reference over several steps") {
  auto p = VBLLParams::zeros(2);
  p.w_mu = {0.5, -0.5, 1.0, 2.0};
  auto state = AdamState::for_params(p, 0.01);
  std::vector<double> theta = p.w_mu, m(4, 0.0), v(4, 0.0);
  for (int t = 1; t <= 6; ++t) {
    auto g = VBLLParams::zeros(2);
    for (std::size_t j = 0; j < 4; ++j) g.w_mu[j] = std::sin(t * 1.3 + j) * (j + 1);
    adam_step(state, p, g);
    for (std::size_t j = 0; j < 4; ++j) {
      m[j] = 0.9 * m[j] + 0.1 * g.w_mu[j];
      v[j] = 0.999 * v[j] + 0.001 * g.w_mu[j] * g.w_mu[j];
      theta[j] -= 0.01 * (m[j] / (1 - std::pow(0.9, t))) /
                  (std::sqrt(v[j] / (1 - std::pow(0.999, t))) + 1e-8);
    }
  }
  CHECK(state.t == 6);
  for (std::size_t j = 0; j < 4; ++j) CHECK(p.w_mu[j] == doctest::Approx(theta[j]).epsilon(1e-13));
}

TEST_CASE("Adam with zero gradient leaves parameters bit-identical") {
  auto p = init_params(3, 2, -2.0, 0.1, 4);
  const auto before = p;
  auto state = AdamState::for_params(p);
  adam_step(state, p, VBLLParams::zeros(3));
  CHECK(p == before);
}

TEST_CASE("Adam rejects non-finite gradients without touching state") {
  auto p = init_params(2, 2, -2.0, 0.1, 4);
  const auto before = p;
  auto state = AdamState::for_params(p);
  auto g = VBLLParams::zeros(2);
  g.b_logvar[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(state, p, g), NumericalError);
  CHECK(p == before);
  CHECK(state.t == 0);
  CHECK_THROWS_AS(adam_step(state, p, VBLLParams::zeros(3)), InvalidArgument);
}

TEST_CASE("train runs exactly the configured number of epochs") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 40, 3);
  const auto r = train(preset(ConfigPreset::C1), E, y);
  CHECK(r.history.epochs.size() == 50);
  for (const auto& rec : r.history.epochs) {
    CHECK(std::isfinite(rec.loss));
    CHECK(rec.loss == doctest::Approx(rec.ce + rec.beta * rec.kl));
  }
}

TEST_CASE("C5 beta sequence is t/50 at epoch start") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 20, 1);
  const auto cfg = preset(ConfigPreset::C5);
  REQUIRE(cfg.kl_mode == KlMode::linear);
  const auto r = train(cfg, E, y);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(r.history.epochs[t].beta == doctest::Approx(static_cast<double>(t) / 50.0));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 30, 2);
  const auto cfg = preset(ConfigPreset::C3);
  const auto a = train(cfg, E, y);
  const auto b = train(cfg, E, y);
  CHECK(a.params == b.params);
  auto other = cfg;
  other.seed = cfg.seed + 1;
  CHECK_FALSE(train(other, E, y).params == a.params);
}

TEST_CASE("log-variances stay inside the clamp range") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 10, 9);
  auto cfg = preset(ConfigPreset::C1);
  cfg.init_logvar = -29.9999;
  cfg.lr = 0.5;
  const auto r = train(cfg, E, y);
  for (double v : r.params.w_logvar) {
    CHECK(v >= kLogvarMin);
    CHECK(v <= kLogvarMax);
  }
}

TEST_CASE("loss is non-increasing late in training on a separable toy with beta fixed at 0") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 200, 11);
  auto cfg = preset(ConfigPreset::C2);
  cfg.fixed_beta = 0.0;
  cfg.noise = NoiseMode::zero;
  const auto r = train(cfg, E, y);
  int upticks = 0;
  bool large = false;
  for (std::size_t t = 11; t < 50; ++t) {
    const double d = r.history.epochs[t].loss - r.history.epochs[t - 1].loss;
    if (d > 0) {
      ++upticks;
      large = large || d >= 1e-3;
    }
  }
  CHECK(upticks <= 2);
  CHECK_FALSE(large);

  // Sampled noise makes each recorded loss a 4-draw estimate; only the trend holds.
  cfg.noise = NoiseMode::sampled;
  const auto noisy = train(cfg, E, y);
  double early = 0.0, late = 0.0;
  for (std::size_t t = 10; t < 20; ++t) early += noisy.history.epochs[t].loss;
  for (std::size_t t = 40; t < 50; ++t) late += noisy.history.epochs[t].loss;
  CHECK(late < early);
}

TEST_CASE("with zero noise and beta 0, training reproduces softmax regression") {
  Matrix E;
  std::vector<int> y;
  separable_toy(E, y, 24, 5);
  TrainConfig cfg;
  cfg.train_samples = 1;
  cfg.noise = NoiseMode::zero;
  cfg.fixed_beta = 0.0;
  cfg.weight_mu_coef = 0.05;
  const auto r = train(cfg, E, y);

  const auto init = init_params(2, 2, cfg.init_logvar, cfg.weight_mu_coef, cfg.seed);
  oracle::SoftmaxRegression ref{2, init.w_mu, init.b_mu};
  std::vector<std::vector<double>> X;
  for (std::size_t i = 0; i < E.rows; ++i) X.push_back({E(i, 0), E(i, 1)});
  oracle::adam_train(ref, X, y, static_cast<int>(cfg.epochs), cfg.lr);

  const auto got = map_predictive(r.params, E);
  for (std::size_t i = 0; i < E.rows; ++i) {
    const auto want = ref.probs(X[i]);
    CHECK(std::fabs(got(i, 0) - want[0]) < 1e-9);
    CHECK(std::fabs(got(i, 1) - want[1]) < 1e-9);
  }
}

TEST_CASE("history CSV layout") {
  testutil::TempDir dir;
  TrainHistory h;
  h.epochs.push_back({1.5, 1.25, 0.5, 0.5});
  h.epochs.push_back({1.0, 1.0, 0.25, 0.0});
  write_history_csv(h, dir / "h.csv");
  CHECK(testutil::read_file(dir / "h.csv") ==
        "epoch,loss,ce,kl,beta\n"
        "0,1.500000000,1.250000000,0.500000000,0.500000000\n"
        "1,1.000000000,1.000000000,0.250000000,0.000000000\n");
}

TEST_CASE("train validates its inputs") {
  Matrix E(3, 2);
  std::vector<int> y{0, 1};
  CHECK_THROWS_AS(train(TrainConfig{}, E, y), InvalidArgument);
  y.push_back(1);
  TrainConfig bad;
  bad.fixed_beta = 2.0;
  CHECK_THROWS_AS(train(bad, E, y), InvalidArgument);
  bad = {};
  bad.epochs = 0;
  CHECK_THROWS_AS(train(bad, E, y), InvalidArgument);
}
