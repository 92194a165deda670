#pragma once

#include <vector>

#include "agtcnsd/tensor.hpp"

namespace agtcnsd {

/// Learnable state of one adaptive graph convolution layer. Per-node weights
/// and biases are generated from shared factors: Theta_n = E_zeta[n] . W_zeta
/// and b_n = E_zeta[n] . b_zeta.
struct AdaptiveGraphParams {
  Tensor node_embedding;  // E_A     [N x d_e]
  Tensor node_factor;     // E_zeta  [N x d_z]
  Tensor weight_factor;   // W_zeta  [d_z x C_in x C_out]
  Tensor bias_factor;     // b_zeta  [d_z x C_out]

  std::size_t node_count() const { return node_embedding.rows(); }
};

/// Predefined-graph reference used as a test oracle only:
/// Z = (I + D^{-1/2} A D^{-1/2}) X Theta + b.
struct StaticGraphSpec {
  Tensor adjacency;  // [N x N], nonnegative
  Tensor weights;    // [C_in x C_out]
  Tensor bias;       // [C_out]
};

/// A_ad = row-softmax(ReLU(E_A . E_A^T)). Rows sum to 1; differentiable.
Tensor adaptive_adjacency(const Tensor& node_embedding);

/// Reference evaluation of the first-order predefined-graph update. Not part
/// of the trained model. Throws when a node with edges has zero degree.
Tensor standard_gcn_forward(const Tensor& x, const StaticGraphSpec& spec);

/// Applies A (an [N x N] matrix) independently to each group of N
/// consecutive rows of x: Y_g = A . X_g. Differentiable in both arguments.
Tensor graph_mix(const Tensor& x, const Tensor& adjacency);

/// Per-node generated linear map: row r of x belongs to node r mod N and is
/// mapped by Theta_n = E_zeta[n] . W_zeta with bias b_n = E_zeta[n] . b_zeta.
Tensor factorized_node_linear(const Tensor& x, const AdaptiveGraphParams& params);

/// Z = (I + A_ad) X E_zeta W_zeta + E_zeta b_zeta with A_ad derived from the
/// layer's own node embedding.
Tensor adaptive_gcn_forward(const Tensor& x, const AdaptiveGraphParams& params);
/// Same update with a caller-supplied mixing matrix (tests, reuse of a
/// precomputed adjacency across time steps).
Tensor adaptive_gcn_forward_with_adjacency(const Tensor& x, const AdaptiveGraphParams& params,
                                           const Tensor& adjacency);

/// Stacks layers over [T x N x C] node states (rows grouped per time step,
/// optionally per batch sample first), ReLU between layers but not after the
/// last. x is [(B*T*N) x C]; each layer owns its params.
Tensor gcn_layer_stack(const Tensor& x, const std::vector<AdaptiveGraphParams>& layers);

}  // namespace agtcnsd
