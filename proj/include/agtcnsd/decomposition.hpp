#pragma once

#include <vector>

#include "agtcnsd/tensor.hpp"

namespace agtcnsd {

/// Trend / period split of one [T x F] window. trend + raw_period
/// reconstructs the input exactly; pure_period is raw_period with only its
/// top-k power spectrum bins retained.
struct DecompositionResult {
  Tensor trend;
  Tensor raw_period;
  Tensor pure_period;
};

/// Learnable pieces of the decomposition block: a linear map for the trend,
/// three causal 1-D convolutions (kernel sizes 3/5/7) plus a fusing linear
/// map for the purified period.
struct DecompBranchParams {
  Tensor trend_weight;               // [F x H]
  Tensor trend_bias;                 // [H]
  std::vector<Tensor> kernels;       // [k x F x C] for k in {3,5,7}
  std::vector<Tensor> kernel_biases; // [C]
  Tensor fuse_weight;                // [3C x H]
  Tensor fuse_bias;                  // [H]
};

/// Centered moving average over an edge-replicated padding of the series
/// (floor((w-1)/2) copies of the first value on the left, ceil((w-1)/2) of
/// the last on the right); raw_period = window - trend. The input must not
/// require gradients: decomposition is preprocessing, not a network layer.
DecompositionResult moving_average_decompose(const Tensor& window, std::size_t avg_window);

/// Keeps the k nonnegative-frequency bins with the highest power |X(w)|^2
/// (ties resolve to the lower frequency) together with their conjugate
/// mirrors, zeroes the rest, and inverse-transforms. k must not exceed
/// floor(n/2) + 1 distinct nonnegative bins.
std::vector<double> fft_topk_filter(const std::vector<double>& series, std::size_t k);

/// moving_average_decompose plus per-feature spectral filtering.
DecompositionResult decompose_window(const Tensor& window, std::size_t avg_window, std::size_t top_k);

/// Affine map per time step across the feature axis. Rows may stack several
/// windows; the map is row-wise either way.
Tensor trend_branch(const Tensor& trend, const DecompBranchParams& params);

/// Three causal convolutions along time, concatenated on the feature axis
/// and linearly fused.
Tensor period_branch(const Tensor& pure_period, const DecompBranchParams& params, std::size_t batch = 1);

/// Branch outputs fused by elementwise sum.
Tensor decomposition_branches(const DecompositionResult& parts, const DecompBranchParams& params,
                              std::size_t batch = 1);

/// Full block: decompose, filter, run both branches, sum.
Tensor decomposition_forward(const Tensor& window, const DecompBranchParams& params, std::size_t avg_window,
                             std::size_t top_k);

}  // namespace agtcnsd
