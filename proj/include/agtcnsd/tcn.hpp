#pragma once

#include <vector>

#include "agtcnsd/tensor.hpp"

namespace agtcnsd {

struct TcnConfig {
  std::size_t n_layers = 4;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> dilations = {1, 2, 4, 8};
  std::size_t channels = 16;       // conv output width per block
  std::size_t reduced_width = 8;   // linear compression before each conv
  bool use_reduction = true;       // false gives the plain block variant

  /// 1 + (kernel_size - 1) * sum(dilations).
  std::size_t receptive_field() const;
};

struct TcnLayerParams {
  Tensor reduction_weight;  // [C_in x R], undefined when use_reduction is off
  Tensor reduction_bias;    // [R]
  Tensor kernel;            // [k x C_conv_in x C_out]
  Tensor conv_bias;         // [C_out]
  Tensor residual_weight;   // [C_in x C_out] 1x1 projection, undefined when C_in == C_out
};

/// Causal dilated convolution along time, out[s] = sum_i f(i) * x[s - d*i]
/// with implicit zero left-padding, so the output keeps length T. x may hold
/// `batch` independent sequences stacked on the row axis ([B*T x C_in]);
/// padding applies per sequence.
Tensor dilated_causal_conv(const Tensor& x, const Tensor& kernel, std::size_t dilation, std::size_t batch = 1);

/// reduction linear -> dilated causal conv -> ReLU -> residual add
/// (1x1-projected when the widths differ).
Tensor tcn_block(const Tensor& x, const TcnLayerParams& params, std::size_t dilation, std::size_t batch = 1);

Tensor tcn_forward(const Tensor& x, const TcnConfig& config, const std::vector<TcnLayerParams>& params,
                   std::size_t batch = 1);

}  // namespace agtcnsd
