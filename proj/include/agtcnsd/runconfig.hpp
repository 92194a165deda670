#pragma once

#include <string>

#include "agtcnsd/model.hpp"
#include "agtcnsd/pipeline.hpp"

namespace agtcnsd {

/// CLI-facing configuration: the model settings plus pipeline options.
/// Serialized as one flat JSON document; unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  std::string target_column = "Chl";
  double pearson_threshold = 0.2;
  std::size_t downsample_factor = 2;
  SplitFractions split;
  double mape_epsilon = 1e-8;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace agtcnsd
