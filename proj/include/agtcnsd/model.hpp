#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "agtcnsd/decomposition.hpp"
#include "agtcnsd/graph.hpp"
#include "agtcnsd/pipeline.hpp"
#include "agtcnsd/tcn.hpp"
#include "agtcnsd/tensor.hpp"

namespace agtcnsd {

/// Architecture and training settings. Defaults follow the reference
/// configuration: batch 128, 300 epochs, Adam at 1e-3, moving-average
/// window 12, top-15 frequency bins, kernels {3,5,7}, 2 graph layers,
/// 4 temporal layers with dilations [1,2,4,8].
struct ModelConfig {
  std::size_t input_len = 72;
  std::size_t horizon = 24;

  std::size_t avg_window = 12;
  std::size_t top_k = 15;
  std::vector<std::size_t> decomp_kernels = {3, 5, 7};
  std::size_t decomp_conv_channels = 8;

  std::size_t gcn_layers = 2;
  std::size_t embed_dim = 7;   // d_e, node embedding width
  std::size_t factor_dim = 7;  // d_z, weight factor rank
  std::size_t node_channels = 4;

  std::size_t tcn_layers = 4;
  std::size_t tcn_kernel = 3;
  std::vector<std::size_t> tcn_dilations = {1, 2, 4, 8};
  std::size_t tcn_channels = 16;
  std::size_t tcn_reduced = 8;

  // Ablation switches (all on = the full model).
  bool use_decomposition = true;
  bool use_gcn = true;
  bool use_tcn = true;
  bool use_reduction = true;

  std::size_t batch_size = 128;
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Stop once the epoch train loss falls below this value (0 disables).
  double stop_at_train_loss = 0.0;

  void validate() const;
  TcnConfig tcn_config() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Every learnable tensor of the assembled model. Which members are
/// populated depends on the config's ablation switches.
struct ModelParams {
  DecompBranchParams decomp;
  std::vector<AdaptiveGraphParams> gcn;
  std::vector<TcnLayerParams> tcn;
  Tensor head_weight;
  Tensor head_bias;
};

ModelParams init_model_params(const ModelConfig& config, std::size_t n_features, std::mt19937_64& rng);
ModelParams clone_params(const ModelParams& params);
/// Stable (name, tensor) listing; the order defines optimizer and
/// checkpoint layout.
std::vector<std::pair<std::string, Tensor>> named_parameters(const ModelParams& params);
std::vector<Tensor> parameter_tensors(const ModelParams& params);

/// One window prepared for the forward pass: raw values plus the
/// gradient-stopped decomposition. Decomposition depends only on the data,
/// so training precomputes this once per window.
struct PreparedWindow {
  std::vector<double> raw;
  std::vector<double> trend;
  std::vector<double> pure_period;
};
PreparedWindow prepare_window(const std::vector<double>& window, std::size_t input_len, std::size_t n_features,
                              const ModelConfig& config);

/// Batch assembled from prepared windows, rows stacked [B*T x F].
struct PreparedBatch {
  std::size_t batch = 0;
  Tensor raw;
  Tensor trend;
  Tensor pure_period;
  Tensor targets;  // [B x H]
};
PreparedBatch assemble_batch(const std::vector<PreparedWindow>& windows, const std::vector<std::vector<double>>& targets,
                             const std::vector<std::size_t>& indices, std::size_t input_len, std::size_t n_features);

Tensor model_forward_prepared(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config);
/// Spec-shaped entry point: batch is rank-3 [B x T x F].
Tensor model_forward(const Tensor& batch, const ModelParams& params, const ModelConfig& config);

Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// Bias-corrected Adam over the parameter list; slot i of the state tracks
/// params[i].
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState for_params(const std::vector<Tensor>& params);
};
void adam_step(std::vector<Tensor>& params, AdamState& state, double learning_rate);

struct TrainingHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;

  void write_csv(const std::string& path) const;
};

struct TrainResult {
  ModelParams params;
  TrainingHistory history;
};

/// Mini-batch training with per-epoch validation; returns the parameters
/// with the best validation loss seen. Throws on a non-finite loss, naming
/// the epoch.
TrainResult train(const WindowedDataset& train_split, const WindowedDataset& val_split, const ModelConfig& config);

/// Convenience inference: predictions [n_windows x horizon] for a dataset.
std::vector<std::vector<double>> predict(const WindowedDataset& dataset, const ModelParams& params,
                                         const ModelConfig& config, std::size_t batch_size = 128);

}  // namespace agtcnsd
