#include "agtcnsd/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "agtcnsd/tcn.hpp"

namespace agtcnsd {

DecompositionResult moving_average_decompose(const Tensor& window, std::size_t avg_window) {
  if (avg_window == 0) throw std::invalid_argument("moving_average_decompose: window size must be >= 1");
  if (window.rank() != 2) throw std::invalid_argument("moving_average_decompose: expects a [T x F] window");
  if (window.requires_grad()) {
    throw std::invalid_argument("moving_average_decompose: input must not require gradients");
  }
  const std::size_t T = window.rows();
  const std::size_t F = window.cols();
  const std::size_t pad_left = (avg_window - 1) / 2;

  Tensor trend({T, F});
  Tensor raw({T, F});
  auto& tv = trend.mutable_values();
  auto& rv = raw.mutable_values();
  const auto& xv = window.values();
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t i = 0; i < avg_window; ++i) {
        // index into the edge-replicated padded series
        const std::ptrdiff_t raw_idx = static_cast<std::ptrdiff_t>(t + i) - static_cast<std::ptrdiff_t>(pad_left);
        const std::size_t idx = raw_idx < 0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(raw_idx), T - 1);
        acc += xv[idx * F + f];
      }
      tv[t * F + f] = acc / static_cast<double>(avg_window);
      rv[t * F + f] = xv[t * F + f] - tv[t * F + f];
    }
  }
  return {trend, raw, Tensor()};
}

std::vector<double> fft_topk_filter(const std::vector<double>& series, std::size_t k) {
  const std::size_t n = series.size();
  if (n == 0) throw std::invalid_argument("fft_topk_filter: empty series");
  const std::size_t bins = n / 2 + 1;  // distinct nonnegative frequencies
  if (k < 1 || k > bins) {
    throw std::invalid_argument("fft_topk_filter: k=" + std::to_string(k) + " outside [1, " + std::to_string(bins) +
                                "] for length " + std::to_string(n));
  }

  // Exact-length DFT; windows are short so the quadratic cost is fine and
  // the bin semantics stay exact for any T.
  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    twiddle[i] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<std::complex<double>> spectrum(n, {0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) acc += series[t] * twiddle[(j * t) % n];
    spectrum[j] = acc;
  }

  std::vector<std::size_t> order(bins);
  for (std::size_t j = 0; j < bins; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double pa = std::norm(spectrum[a]);
    const double pb = std::norm(spectrum[b]);
    if (pa != pb) return pa > pb;
    return a < b;  // equal power: lower frequency wins
  });

  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = order[i];
    keep[j] = true;
    keep[(n - j) % n] = true;  // conjugate mirror keeps the inverse real
  }

  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      if (keep[j]) acc += spectrum[j] * std::conj(twiddle[(j * t) % n]);
    }
    out[t] = acc.real() / static_cast<double>(n);
  }
  return out;
}

DecompositionResult decompose_window(const Tensor& window, std::size_t avg_window, std::size_t top_k) {
  DecompositionResult result = moving_average_decompose(window, avg_window);
  const std::size_t T = window.rows();
  const std::size_t F = window.cols();
  Tensor pure({T, F});
  auto& pv = pure.mutable_values();
  std::vector<double> column(T);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) column[t] = result.raw_period.at(t * F + f);
    const std::vector<double> filtered = fft_topk_filter(column, top_k);
    for (std::size_t t = 0; t < T; ++t) pv[t * F + f] = filtered[t];
  }
  result.pure_period = pure;
  return result;
}

Tensor trend_branch(const Tensor& trend, const DecompBranchParams& params) {
  return add(matmul(trend, params.trend_weight), params.trend_bias);
}

Tensor period_branch(const Tensor& pure_period, const DecompBranchParams& params, std::size_t batch) {
  if (pure_period.rows() == 0) throw std::invalid_argument("period_branch: empty input");
  if (params.kernels.size() != params.kernel_biases.size() || params.kernels.empty()) {
    throw std::invalid_argument("period_branch: malformed kernel parameter set");
  }
  std::vector<Tensor> taps;
  taps.reserve(params.kernels.size());
  for (std::size_t i = 0; i < params.kernels.size(); ++i) {
    taps.push_back(add(dilated_causal_conv(pure_period, params.kernels[i], 1, batch), params.kernel_biases[i]));
  }
  return add(matmul(concat_cols(taps), params.fuse_weight), params.fuse_bias);
}

Tensor decomposition_branches(const DecompositionResult& parts, const DecompBranchParams& params,
                              std::size_t batch) {
  return add(trend_branch(parts.trend, params), period_branch(parts.pure_period, params, batch));
}

Tensor decomposition_forward(const Tensor& window, const DecompBranchParams& params, std::size_t avg_window,
                             std::size_t top_k) {
  return decomposition_branches(decompose_window(window, avg_window, top_k), params);
}

}  // namespace agtcnsd
