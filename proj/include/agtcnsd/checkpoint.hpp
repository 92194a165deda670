#pragma once

#include <string>
#include <vector>

#include "agtcnsd/model.hpp"
#include "agtcnsd/timeseries.hpp"

namespace agtcnsd {

/// Everything needed to reproduce predictions: config, the feature layout
/// the model was trained on, normalization stats, and all parameters.
struct Checkpoint {
  ModelConfig config;
  std::vector<std::string> feature_names;
  std::string target_name;
  NormalizationStats stats;
  ModelParams params;
};

/// Layout: 8 magic bytes, u32 format version, config JSON block, stats JSON
/// block, then named float64 arrays with shape headers. Load reproduces
/// predictions bitwise.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace agtcnsd
