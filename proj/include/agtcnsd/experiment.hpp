#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agtcnsd/metrics.hpp"
#include "agtcnsd/model.hpp"
#include "agtcnsd/pipeline.hpp"
#include "agtcnsd/timeseries.hpp"

namespace agtcnsd {

/// The six ablation configurations:
///   model1  plain temporal convolution
///   model2  temporal convolution with the structural changes (reduction linears)
///   model3  full model minus series decomposition
///   model4  full model minus the temporal module (linear head on the last step)
///   model5  full model minus the graph module
///   model6  the full model
enum class AblationVariant { model1, model2, model3, model4, model5, model6 };

std::string variant_name(AblationVariant v);
AblationVariant variant_from_name(const std::string& name);
/// Applies the variant's module switches on top of a base config.
ModelConfig variant_config(const ModelConfig& base, AblationVariant v);

struct ExperimentCell {
  std::string variant;
  std::size_t horizon = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<MetricTriple>> per_seed;  // nullopt where that run failed
  std::vector<std::string> errors;                    // empty string where the run succeeded
  MetricTriple median;                                // across successful seeds, per metric
  bool ok = false;                                    // at least one successful seed
};

struct ExperimentReport {
  std::string dataset_id;
  std::string config_hash;
  std::string scale;  // "raw" or "normalized"
  std::vector<std::uint64_t> seeds;
  std::vector<ExperimentCell> cells;
  /// Baseline rows supplied from outside (e.g. published LSTM numbers);
  /// carried through to the outputs, never computed here.
  std::vector<ExperimentCell> external;

  const ExperimentCell& cell(const std::string& variant, std::size_t horizon) const;
  std::string to_json() const;
  void write_json(const std::string& path) const;
  /// Rows = models, column groups = horizons, metrics mae/rmse/mape.
  void write_csv(const std::string& path) const;
};

struct ExperimentDataset {
  TimeSeriesFrame frame;  // cleaned, selected, normalized
  NormalizationStats stats;
  std::string target_column;
  std::string id;
};

struct ExperimentOptions {
  SplitFractions split;
  bool raw_scale = true;
  double mape_epsilon = 1e-8;
  std::size_t workers = 1;
};

/// Trains each (variant, horizon, seed) combination on the shared config
/// (only module switches and the horizon differ), evaluates on the test
/// split and reports the per-cell median across seeds. Training failures
/// are recorded in the cell instead of aborting the sweep.
ExperimentReport run_ablation(const ExperimentDataset& dataset, const ModelConfig& base,
                              const std::vector<AblationVariant>& variants, const std::vector<std::size_t>& horizons,
                              const std::vector<std::uint64_t>& seeds, const ExperimentOptions& options);

/// Table-shaped comparison of the full model against the plain temporal
/// baseline over several horizons (rows AGTCNSD and TCN).
ExperimentReport horizon_sweep(const ExperimentDataset& dataset, const ModelConfig& base,
                               const std::vector<std::size_t>& horizons, const std::vector<std::uint64_t>& seeds,
                               const ExperimentOptions& options);

/// Flattened test-set metrics for a trained model, optionally on the raw
/// (denormalized) scale.
MetricTriple evaluate_model(const WindowedDataset& test_split, const ModelParams& params, const ModelConfig& config,
                            const NormalizationStats& stats, const std::string& target_column, bool raw_scale,
                            double mape_epsilon);

}  // namespace agtcnsd
