#include "agtcnsd/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace agtcnsd {

Tensor adaptive_adjacency(const Tensor& node_embedding) {
  return softmax_rows(relu(matmul(node_embedding, transpose(node_embedding))));
}

Tensor standard_gcn_forward(const Tensor& x, const StaticGraphSpec& spec) {
  const std::size_t n = spec.adjacency.rows();
  if (spec.adjacency.cols() != n) throw std::invalid_argument("standard_gcn: adjacency must be square");
  if (x.rows() != n) throw std::invalid_argument("standard_gcn: node count mismatch");

  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    bool has_edge = false;
    for (std::size_t j = 0; j < n; ++j) {
      degree += spec.adjacency.at2(i, j);
      if (spec.adjacency.at2(i, j) != 0.0 || spec.adjacency.at2(j, i) != 0.0) has_edge = true;
    }
    if (degree <= 0.0) {
      if (has_edge) throw std::invalid_argument("standard_gcn: zero degree at connected node " + std::to_string(i));
      inv_sqrt_degree[i] = 0.0;
    } else {
      inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
    }
  }

  // (I + D^{-1/2} A D^{-1/2}) X
  const std::size_t c_in = x.cols();
  Tensor mixed({n, c_in});
  auto& mv = mixed.mutable_values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < c_in; ++c) {
      double acc = x.at2(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        acc += inv_sqrt_degree[i] * spec.adjacency.at2(i, j) * inv_sqrt_degree[j] * x.at2(j, c);
      }
      mv[i * c_in + c] = acc;
    }
  }
  NoGradGuard guard;  // oracle path, never trained
  return add(matmul(mixed, spec.weights), spec.bias);
}

Tensor graph_mix(const Tensor& x, const Tensor& adjacency) {
  if (x.rank() != 2 || adjacency.rank() != 2) throw std::invalid_argument("graph_mix: expects rank-2 inputs");
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw std::invalid_argument("graph_mix: adjacency must be square");
  if (n == 0 || x.rows() % n != 0) {
    throw std::invalid_argument("graph_mix: row count " + std::to_string(x.rows()) +
                                " is not a multiple of node count " + std::to_string(n));
  }
  const std::size_t groups = x.rows() / n;
  const std::size_t c = x.cols();
  const auto& av = adjacency.values();
  const auto& xv = x.values();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * n;
    for (std::size_t i = 0; i < n; ++i) {
      double* orow = &out[(base + i) * c];
      for (std::size_t j = 0; j < n; ++j) {
        const double aij = av[i * n + j];
        if (aij == 0.0) continue;
        const double* xrow = &xv[(base + j) * c];
        for (std::size_t q = 0; q < c; ++q) orow[q] += aij * xrow[q];
      }
    }
  }
  Tensor z(x.shape(), std::move(out));
  if (Tape::active().recording() && (x.requires_grad() || adjacency.requires_grad())) {
    z.set_requires_grad(true);
    auto xr = x.raw(), ar = adjacency.raw(), zr = z.raw();
    Tape::active().record([xr, ar, zr, groups, n, c] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& gx = xr.grad();
      auto& ga = ar.grad();
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = g * n;
        for (std::size_t i = 0; i < n; ++i) {
          const double* gzrow = &gz[(base + i) * c];
          for (std::size_t j = 0; j < n; ++j) {
            const double aij = ar.data()[i * n + j];
            double* gxrow = &gx[(base + j) * c];
            const double* xrow = &xr.data()[(base + j) * c];
            double dot = 0.0;
            for (std::size_t q = 0; q < c; ++q) {
              gxrow[q] += aij * gzrow[q];
              dot += gzrow[q] * xrow[q];
            }
            ga[i * n + j] += dot;
          }
        }
      }
    });
  }
  return z;
}

Tensor factorized_node_linear(const Tensor& x, const AdaptiveGraphParams& params) {
  if (x.rank() != 2) throw std::invalid_argument("factorized_node_linear: expects rank-2 input");
  const std::size_t n = params.node_factor.rows();
  const std::size_t dz = params.node_factor.cols();
  if (params.weight_factor.rank() != 3 || params.weight_factor.shape()[0] != dz) {
    throw std::invalid_argument("factorized_node_linear: weight factor must be [d_z x C_in x C_out]");
  }
  const std::size_t c_in = params.weight_factor.shape()[1];
  const std::size_t c_out = params.weight_factor.shape()[2];
  if (params.bias_factor.rank() != 2 || params.bias_factor.rows() != dz || params.bias_factor.cols() != c_out) {
    throw std::invalid_argument("factorized_node_linear: bias factor must be [d_z x C_out]");
  }
  if (x.cols() != c_in) {
    throw std::invalid_argument("factorized_node_linear: input channel axis is " + std::to_string(x.cols()) +
                                ", weight factor expects " + std::to_string(c_in));
  }
  if (n == 0 || x.rows() % n != 0) {
    throw std::invalid_argument("factorized_node_linear: row axis " + std::to_string(x.rows()) +
                                " is not a multiple of node count " + std::to_string(n));
  }

  const auto& ev = params.node_factor.values();
  const auto& wv = params.weight_factor.values();
  const auto& bv = params.bias_factor.values();
  const auto& xv = x.values();

  // Materialize Theta_n = E_zeta[n] . W_zeta and b_n = E_zeta[n] . b_zeta.
  std::vector<double> theta(n * c_in * c_out, 0.0);
  std::vector<double> bias(n * c_out, 0.0);
  for (std::size_t node = 0; node < n; ++node) {
    for (std::size_t z = 0; z < dz; ++z) {
      const double e = ev[node * dz + z];
      if (e == 0.0) continue;
      const double* wz = &wv[z * c_in * c_out];
      double* tn = &theta[node * c_in * c_out];
      for (std::size_t i = 0; i < c_in * c_out; ++i) tn[i] += e * wz[i];
      const double* bz = &bv[z * c_out];
      double* bn = &bias[node * c_out];
      for (std::size_t o = 0; o < c_out; ++o) bn[o] += e * bz[o];
    }
  }

  std::vector<double> out(x.rows() * c_out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t node = r % n;
    const double* tn = &theta[node * c_in * c_out];
    const double* xrow = &xv[r * c_in];
    double* orow = &out[r * c_out];
    for (std::size_t o = 0; o < c_out; ++o) orow[o] = bias[node * c_out + o];
    for (std::size_t c = 0; c < c_in; ++c) {
      const double xc = xrow[c];
      if (xc == 0.0) continue;
      const double* trow = &tn[c * c_out];
      for (std::size_t o = 0; o < c_out; ++o) orow[o] += xc * trow[o];
    }
  }

  Tensor zt({x.rows(), c_out}, std::move(out));
  const bool needs = x.requires_grad() || params.node_factor.requires_grad() ||
                     params.weight_factor.requires_grad() || params.bias_factor.requires_grad();
  if (Tape::active().recording() && needs) {
    zt.set_requires_grad(true);
    auto xr = x.raw(), er = params.node_factor.raw(), wr = params.weight_factor.raw(),
         br = params.bias_factor.raw(), zr = zt.raw();
    const std::size_t rows = x.rows();
    Tape::active().record([xr, er, wr, br, zr, theta = std::move(theta), rows, n, dz, c_in, c_out] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& gx = xr.grad();
      auto& ge = er.grad();
      auto& gw = wr.grad();
      auto& gb = br.grad();

      // Per-node sums over the rows that hit the node:
      //   S_n[c,o] = sum_r x[r,c] gz[r,o],  t_n[o] = sum_r gz[r,o]
      std::vector<double> s(n * c_in * c_out, 0.0);
      std::vector<double> tsum(n * c_out, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t node = r % n;
        const double* gzrow = &gz[r * c_out];
        const double* xrow = &xr.data()[r * c_in];
        const double* tn = &theta[node * c_in * c_out];
        double* gxrow = &gx[r * c_in];
        double* sn = &s[node * c_in * c_out];
        double* tn_sum = &tsum[node * c_out];
        for (std::size_t o = 0; o < c_out; ++o) tn_sum[o] += gzrow[o];
        for (std::size_t c = 0; c < c_in; ++c) {
          double acc = 0.0;
          for (std::size_t o = 0; o < c_out; ++o) {
            acc += gzrow[o] * tn[c * c_out + o];
            sn[c * c_out + o] += xrow[c] * gzrow[o];
          }
          gxrow[c] += acc;
        }
      }
      for (std::size_t node = 0; node < n; ++node) {
        const double* sn = &s[node * c_in * c_out];
        const double* tn_sum = &tsum[node * c_out];
        for (std::size_t z = 0; z < dz; ++z) {
          const double e = er.data()[node * dz + z];
          double de = 0.0;
          const double* wz = &wr.data()[z * c_in * c_out];
          double* gwz = &gw[z * c_in * c_out];
          for (std::size_t i = 0; i < c_in * c_out; ++i) {
            gwz[i] += e * sn[i];
            de += sn[i] * wz[i];
          }
          const double* bz = &br.data()[z * c_out];
          double* gbz = &gb[z * c_out];
          for (std::size_t o = 0; o < c_out; ++o) {
            gbz[o] += e * tn_sum[o];
            de += tn_sum[o] * bz[o];
          }
          ge[node * dz + z] += de;
        }
      }
    });
  }
  return zt;
}

Tensor adaptive_gcn_forward_with_adjacency(const Tensor& x, const AdaptiveGraphParams& params,
                                           const Tensor& adjacency) {
  Tensor mixed = add(x, graph_mix(x, adjacency));  // (I + A_ad) X
  return factorized_node_linear(mixed, params);
}

Tensor adaptive_gcn_forward(const Tensor& x, const AdaptiveGraphParams& params) {
  return adaptive_gcn_forward_with_adjacency(x, params, adaptive_adjacency(params.node_embedding));
}

Tensor gcn_layer_stack(const Tensor& x, const std::vector<AdaptiveGraphParams>& layers) {
  if (layers.empty()) throw std::invalid_argument("gcn_layer_stack: need at least one layer");
  Tensor h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Tensor adjacency = adaptive_adjacency(layers[l].node_embedding);
    h = adaptive_gcn_forward_with_adjacency(h, layers[l], adjacency);
    if (l + 1 < layers.size()) h = relu(h);
  }
  return h;
}

}  // namespace agtcnsd
