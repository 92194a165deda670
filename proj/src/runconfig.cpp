#include "agtcnsd/runconfig.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace agtcnsd {

namespace {

const char* kPipelineKeys[] = {"target_column",     "pearson_threshold", "downsample_factor",
                               "train_fraction",    "val_fraction",      "test_fraction",
                               "mape_epsilon"};

}  // namespace

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(model.to_json());
  j["target_column"] = target_column;
  j["pearson_threshold"] = pearson_threshold;
  j["downsample_factor"] = downsample_factor;
  j["train_fraction"] = split.train;
  j["val_fraction"] = split.val;
  j["test_fraction"] = split.test;
  j["mape_epsilon"] = mape_epsilon;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunConfig c;

  nlohmann::json model_part = nlohmann::json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool pipeline_key = false;
    for (const char* k : kPipelineKeys) {
      if (it.key() == k) {
        pipeline_key = true;
        break;
      }
    }
    if (!pipeline_key) model_part[it.key()] = it.value();
  }
  c.model = ModelConfig::from_json(model_part.dump());  // rejects unknown keys

  if (j.contains("target_column")) c.target_column = j.at("target_column").get<std::string>();
  if (j.contains("pearson_threshold")) c.pearson_threshold = j.at("pearson_threshold").get<double>();
  if (j.contains("downsample_factor")) c.downsample_factor = j.at("downsample_factor").get<std::size_t>();
  if (j.contains("train_fraction")) c.split.train = j.at("train_fraction").get<double>();
  if (j.contains("val_fraction")) c.split.val = j.at("val_fraction").get<double>();
  if (j.contains("test_fraction")) c.split.test = j.at("test_fraction").get<double>();
  if (j.contains("mape_epsilon")) c.mape_epsilon = j.at("mape_epsilon").get<double>();

  if (c.pearson_threshold < 0.0 || c.pearson_threshold >= 1.0) {
    throw std::invalid_argument("config: pearson_threshold must lie in [0, 1)");
  }
  if (c.downsample_factor == 0) throw std::invalid_argument("config: downsample_factor must be >= 1");
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace agtcnsd
