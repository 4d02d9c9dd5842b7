#pragma once

#include <filesystem>

#include "vbll/config.hpp"
#include "vbll/vbll_head.hpp"

namespace vbll {

struct TrainedModel {
  VBLLParams params;
  TrainConfig config;
};

// "VBLM" | u32 version | u32 C | u32 H | W_mu, W_logvar, b_mu, b_logvar as
// little-endian f64 row-major | TrainConfig as key=value text.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace vbll
