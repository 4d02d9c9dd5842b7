#include <cmath>
#include <sstream>

#include "csv_util.hpp"
#include "vbll/config.hpp"
#include "vbll/error.hpp"

namespace vbll {

std::string_view to_string(KlMode mode) {
  return mode == KlMode::cosine ? "cosine" : "linear";
}

std::optional<KlMode> parse_kl_mode(std::string_view text) {
  if (text == "cosine") return KlMode::cosine;
  if (text == "linear") return KlMode::linear;
  return std::nullopt;
}

bool within_search_space(const TrainConfig& cfg) {
  return cfg.init_logvar >= kInitLogvarMin && cfg.init_logvar <= kInitLogvarMax &&
         cfg.weight_mu_coef >= kWeightMuCoefMin && cfg.weight_mu_coef <= kWeightMuCoefMax;
}

TrainConfig preset(ConfigPreset id) {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.lr = 1e-3;
  switch (id) {
    case ConfigPreset::C1:
      cfg.id = "C1";
      cfg.kl_mode = KlMode::cosine;
      cfg.init_logvar = -5.0;
      cfg.weight_mu_coef = 0.001;
      break;
    case ConfigPreset::C2:
      cfg.id = "C2";
      cfg.kl_mode = KlMode::cosine;
      cfg.init_logvar = -3.0;
      cfg.weight_mu_coef = 0.001;
      break;
    case ConfigPreset::C3:
      cfg.id = "C3";
      cfg.kl_mode = KlMode::cosine;
      cfg.init_logvar = -2.0;
      cfg.weight_mu_coef = 0.001;
      break;
    case ConfigPreset::C4:
      cfg.id = "C4";
      cfg.kl_mode = KlMode::cosine;
      cfg.init_logvar = -2.0;
      cfg.weight_mu_coef = 0.01;
      break;
    case ConfigPreset::C5:
      cfg.id = "C5";
      cfg.kl_mode = KlMode::linear;
      cfg.init_logvar = -2.0;
      cfg.weight_mu_coef = 0.01;
      break;
  }
  return cfg;
}

std::optional<ConfigPreset> parse_preset(std::string_view text) {
  if (text.size() == 2 && (text[0] == 'C' || text[0] == 'c') && text[1] >= '1' &&
      text[1] <= '5') {
    return static_cast<ConfigPreset>(text[1] - '0');
  }
  return std::nullopt;
}

std::vector<ConfigPreset> all_presets() {
  return {ConfigPreset::C1, ConfigPreset::C2, ConfigPreset::C3, ConfigPreset::C4,
          ConfigPreset::C5};
}

TrainConfig map_baseline_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.id = "Baseline";
  cfg.init_logvar = -5.0;
  cfg.weight_mu_coef = 0.01;
  cfg.seed = seed;
  cfg.train_samples = 1;
  cfg.eval_samples = 1;
  cfg.fixed_beta = 0.0;
  cfg.noise = NoiseMode::zero;
  return cfg;
}

std::string to_text(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "id=" << cfg.id << '\n'
      << "init_logvar=" << csv::exact(cfg.init_logvar) << '\n'
      << "weight_mu_coef=" << csv::exact(cfg.weight_mu_coef) << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "kl_mode=" << to_string(cfg.kl_mode) << '\n'
      << "lr=" << csv::exact(cfg.lr) << '\n'
      << "seed=" << cfg.seed << '\n'
      << "train_samples=" << cfg.train_samples << '\n'
      << "eval_samples=" << cfg.eval_samples << '\n'
      << "fixed_beta=" << (cfg.fixed_beta ? csv::exact(*cfg.fixed_beta) : "none") << '\n'
      << "noise=" << (cfg.noise == NoiseMode::zero ? "zero" : "sampled") << '\n';
  return out.str();
}

namespace {

double need_double(std::string_view key, std::string_view value) {
  const auto v = csv::parse_double(value);
  if (!v || !std::isfinite(*v)) {
    throw InvalidArgument("config: bad value for " + std::string(key) + ": '" +
                          std::string(value) + "'");
  }
  return *v;
}

unsigned long long need_uint(std::string_view key, std::string_view value) {
  const auto v = csv::parse_int(value);
  if (!v || *v < 0) {
    throw InvalidArgument("config: bad value for " + std::string(key) + ": '" +
                          std::string(value) + "'");
  }
  return static_cast<unsigned long long>(*v);
}

}  // namespace

TrainConfig config_from_text(std::string_view text, TrainConfig cfg) {
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find_first_of(";\n", start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = csv::trim(text.substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config: expected key=value, got '" + std::string(item) + "'");
    }
    const auto key = csv::trim(item.substr(0, eq));
    const auto value = csv::trim(item.substr(eq + 1));
    if (key == "id") {
      cfg.id = std::string(value);
    } else if (key == "init_logvar") {
      cfg.init_logvar = need_double(key, value);
    } else if (key == "weight_mu_coef") {
      cfg.weight_mu_coef = need_double(key, value);
    } else if (key == "epochs") {
      cfg.epochs = static_cast<unsigned>(need_uint(key, value));
    } else if (key == "kl_mode" || key == "kl") {
      const auto m = parse_kl_mode(value);
      if (!m) throw InvalidArgument("config: unknown kl_mode '" + std::string(value) + "'");
      cfg.kl_mode = *m;
    } else if (key == "lr") {
      cfg.lr = need_double(key, value);
    } else if (key == "seed") {
      cfg.seed = need_uint(key, value);
    } else if (key == "train_samples") {
      cfg.train_samples = static_cast<unsigned>(need_uint(key, value));
    } else if (key == "eval_samples") {
      cfg.eval_samples = static_cast<unsigned>(need_uint(key, value));
    } else if (key == "fixed_beta") {
      if (value == "none") {
        cfg.fixed_beta.reset();
      } else {
        cfg.fixed_beta = need_double(key, value);
      }
    } else if (key == "noise") {
      if (value == "zero") {
        cfg.noise = NoiseMode::zero;
      } else if (value == "sampled") {
        cfg.noise = NoiseMode::sampled;
      } else {
        throw InvalidArgument("config: unknown noise mode '" + std::string(value) + "'");
      }
    } else {
      throw InvalidArgument("config: unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

}  // namespace vbll
