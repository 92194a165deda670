#include "agtcnsd/tcn.hpp"

#include <stdexcept>
#include <string>

namespace agtcnsd {

std::size_t TcnConfig::receptive_field() const {
  std::size_t total = 0;
  for (std::size_t d : dilations) total += d;
  return 1 + (kernel_size - 1) * total;
}

Tensor dilated_causal_conv(const Tensor& x, const Tensor& kernel, std::size_t dilation, std::size_t batch) {
  if (dilation == 0) throw std::invalid_argument("dilated_causal_conv: dilation must be >= 1");
  if (x.rank() != 2 || kernel.rank() != 3) {
    throw std::invalid_argument("dilated_causal_conv: expects x rank-2 and kernel rank-3");
  }
  const std::size_t rows = x.rows();
  if (batch == 0 || rows % batch != 0) {
    throw std::invalid_argument("dilated_causal_conv: row count " + std::to_string(rows) +
                                " is not divisible by batch " + std::to_string(batch));
  }
  const std::size_t T = rows / batch;
  const std::size_t k = kernel.shape()[0];
  const std::size_t c_in = kernel.shape()[1];
  const std::size_t c_out = kernel.shape()[2];
  if (x.cols() != c_in) {
    throw std::invalid_argument("dilated_causal_conv: input has " + std::to_string(x.cols()) +
                                " channels, kernel expects " + std::to_string(c_in));
  }

  const auto& xv = x.values();
  const auto& fv = kernel.values();
  std::vector<double> out(rows * c_out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * T;
    for (std::size_t s = 0; s < T; ++s) {
      double* orow = &out[(base + s) * c_out];
      for (std::size_t i = 0; i < k && s >= dilation * i; ++i) {
        const double* xrow = &xv[(base + s - dilation * i) * c_in];
        const double* frow = &fv[i * c_in * c_out];
        for (std::size_t c = 0; c < c_in; ++c) {
          const double xc = xrow[c];
          if (xc == 0.0) continue;
          const double* fc = &frow[c * c_out];
          for (std::size_t o = 0; o < c_out; ++o) orow[o] += xc * fc[o];
        }
      }
    }
  }

  Tensor z({rows, c_out}, std::move(out));
  if (Tape::active().recording() && (x.requires_grad() || kernel.requires_grad())) {
    z.set_requires_grad(true);
    auto xr = x.raw(), fr = kernel.raw(), zr = z.raw();
    Tape::active().record([xr, fr, zr, batch, T, k, c_in, c_out, dilation] {
      if (!zr.grad_present()) return;
      const auto& gz = zr.grad();
      auto& gx = xr.grad();
      auto& gf = fr.grad();
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * T;
        for (std::size_t s = 0; s < T; ++s) {
          const double* gzrow = &gz[(base + s) * c_out];
          for (std::size_t i = 0; i < k && s >= dilation * i; ++i) {
            const std::size_t t = s - dilation * i;
            const double* xrow = &xr.data()[(base + t) * c_in];
            double* gxrow = &gx[(base + t) * c_in];
            const double* frow = &fr.data()[i * c_in * c_out];
            double* gfrow = &gf[i * c_in * c_out];
            for (std::size_t c = 0; c < c_in; ++c) {
              double acc = 0.0;
              for (std::size_t o = 0; o < c_out; ++o) {
                acc += gzrow[o] * frow[c * c_out + o];
                gfrow[c * c_out + o] += gzrow[o] * xrow[c];
              }
              gxrow[c] += acc;
            }
          }
        }
      }
    });
  }
  return z;
}

Tensor tcn_block(const Tensor& x, const TcnLayerParams& params, std::size_t dilation, std::size_t batch) {
  Tensor h = x;
  if (params.reduction_weight.defined()) {
    h = add(matmul(h, params.reduction_weight), params.reduction_bias);
  }
  Tensor conv = add(dilated_causal_conv(h, params.kernel, dilation, batch), params.conv_bias);
  Tensor activated = relu(conv);
  Tensor residual = params.residual_weight.defined() ? matmul(x, params.residual_weight) : x;
  return add(activated, residual);
}

Tensor tcn_forward(const Tensor& x, const TcnConfig& config, const std::vector<TcnLayerParams>& params,
                   std::size_t batch) {
  if (config.n_layers == 0) throw std::invalid_argument("tcn_forward: need at least one layer");
  if (config.dilations.size() != config.n_layers) {
    throw std::invalid_argument("tcn_forward: dilation list length " + std::to_string(config.dilations.size()) +
                                " does not match n_layers " + std::to_string(config.n_layers));
  }
  if (params.size() != config.n_layers) {
    throw std::invalid_argument("tcn_forward: got " + std::to_string(params.size()) + " layer params, expected " +
                                std::to_string(config.n_layers));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    h = tcn_block(h, params[l], config.dilations[l], batch);
  }
  return h;
}

}  // namespace agtcnsd
