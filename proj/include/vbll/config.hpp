#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vbll {

enum class KlMode { cosine, linear };

// `zero` forces every reparameterization draw to 0 (deterministic MAP training).
enum class NoiseMode { sampled, zero };

std::string_view to_string(KlMode mode);
std::optional<KlMode> parse_kl_mode(std::string_view text);

struct TrainConfig {
  std::string id = "custom";
  double init_logvar = -2.0;
  double weight_mu_coef = 0.01;
  unsigned epochs = 50;
  KlMode kl_mode = KlMode::cosine;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  unsigned train_samples = 4;
  unsigned eval_samples = 100;
  // When set, replaces the annealing schedule with a constant.
  std::optional<double> fixed_beta;
  NoiseMode noise = NoiseMode::sampled;

  bool operator==(const TrainConfig&) const = default;
};

// Search-space bounds for the two tuned hyperparameters.
inline constexpr double kInitLogvarMin = -5.0;
inline constexpr double kInitLogvarMax = -1.5;
inline constexpr double kWeightMuCoefMin = 0.0001;
inline constexpr double kWeightMuCoefMax = 0.1;

bool within_search_space(const TrainConfig& cfg);

enum class ConfigPreset { C1 = 1, C2, C3, C4, C5 };

TrainConfig preset(ConfigPreset id);
std::optional<ConfigPreset> parse_preset(std::string_view text);
std::vector<ConfigPreset> all_presets();

// Stand-in deterministic baseline: beta fixed at 0 and zero noise, i.e.
// plain softmax regression with the same optimizer and epoch count.
TrainConfig map_baseline_config(std::uint64_t seed);

// key=value lines, one per field, fixed order.
std::string to_text(const TrainConfig& cfg);
// Inverse of to_text; also accepts ';'-separated pairs on one line. Unknown
// keys and malformed values throw InvalidArgument.
TrainConfig config_from_text(std::string_view text, TrainConfig base = {});

}  // namespace vbll
