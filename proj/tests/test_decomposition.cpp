#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "agtcnsd/decomposition.hpp"
#include "agtcnsd/gradcheck.hpp"
#include "agtcnsd/model.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace agtcnsd;
using testsupport::random_tensor;
using testsupport::weighted_sum;

namespace {

std::vector<double> sinusoid(std::size_t n, double cycles, double amplitude, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = amplitude * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) / static_cast<double>(n) +
                                phase);
  }
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

DecompBranchParams small_params(std::size_t n_features, std::size_t hidden, std::uint64_t seed) {
  ModelConfig config;
  config.node_channels = hidden / n_features;
  config.decomp_conv_channels = 3;
  config.input_len = 16;
  config.top_k = 4;
  std::mt19937_64 rng(seed);
  return init_model_params(config, n_features, rng).decomp;
}

}  // namespace

TEST_CASE("moving average: constants, window of one, hand-enumerated means") {
  Tensor constant({5, 2}, std::vector<double>(10, 3.25));
  DecompositionResult r = moving_average_decompose(constant, 4);
  for (double v : r.trend.values()) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
  for (double v : r.raw_period.values()) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

  Tensor series({4, 1}, {1.0, 2.0, 3.0, 4.0});
  DecompositionResult identity = moving_average_decompose(series, 1);
  CHECK(identity.trend.values() == series.values());
  for (double v : identity.raw_period.values()) CHECK(v == 0.0);

  DecompositionResult window3 = moving_average_decompose(series, 3);
  CHECK(window3.trend.at(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(window3.trend.at(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(window3.trend.at(2) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(window3.trend.at(3) == doctest::Approx(11.0 / 3.0).epsilon(1e-15));

  CHECK_THROWS_AS(moving_average_decompose(series, 0), std::invalid_argument);
}

TEST_CASE("decomposition is gradient-stopped preprocessing") {
  Tensor window({4, 1}, {1.0, 2.0, 3.0, 4.0});
  window.set_requires_grad(true);
  CHECK_THROWS_AS(moving_average_decompose(window, 2), std::invalid_argument);
}

TEST_CASE("reconstruction: trend + raw_period equals the window on 100 random draws") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = testsupport::random_dim(rng, 2, 24);
    const std::size_t f = testsupport::random_dim(rng, 1, 6);
    const std::size_t w = testsupport::random_dim(rng, 1, 12);
    Tensor window = random_tensor({t, f}, rng, -10.0, 10.0);
    DecompositionResult r = moving_average_decompose(window, w);
    for (std::size_t i = 0; i < window.size(); ++i) {
      CHECK(std::abs(r.trend.at(i) + r.raw_period.at(i) - window.at(i)) <= 1e-12);
    }
  }
}

TEST_CASE("spectral filter: single line, identity at full k, dominant-component recovery") {
  const std::size_t n = 64;
  const std::vector<double> pure = sinusoid(n, 5.0, 1.0);
  CHECK(max_abs_diff(fft_topk_filter(pure, 1), pure) < 1e-9);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> noisy(n);
  for (double& v : noisy) v = dist(rng);
  CHECK(max_abs_diff(fft_topk_filter(noisy, n / 2 + 1), noisy) < 1e-9);

  std::vector<double> odd(31);
  for (double& v : odd) v = dist(rng);
  CHECK(max_abs_diff(fft_topk_filter(odd, 31 / 2 + 1), odd) < 1e-9);

  const std::vector<double> strong = sinusoid(n, 4.0, 3.0, 0.7);
  const std::vector<double> weak = sinusoid(n, 9.0, 1.0, 1.9);
  std::vector<double> mixed(n);
  for (std::size_t t = 0; t < n; ++t) mixed[t] = strong[t] + weak[t];
  CHECK(max_abs_diff(fft_topk_filter(mixed, 1), strong) < 1e-6);
}

TEST_CASE("spectral filter: idempotence, energy monotonicity, k range errors") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t n : {24u, 25u, 40u}) {
    std::vector<double> x(n);
    for (double& v : x) v = dist(rng);
    for (std::size_t k : {1u, 3u, 7u}) {
      const std::vector<double> once = fft_topk_filter(x, k);
      const std::vector<double> twice = fft_topk_filter(once, k);
      CHECK(max_abs_diff(once, twice) < 1e-9);

      double raw_energy = 0.0, filtered_energy = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        raw_energy += x[t] * x[t];
        filtered_energy += once[t] * once[t];
      }
      CHECK(filtered_energy <= raw_energy + 1e-9);
    }
  }
  CHECK_THROWS_AS(fft_topk_filter(std::vector<double>(8, 1.0), 0), std::invalid_argument);
  CHECK_THROWS_AS(fft_topk_filter(std::vector<double>(8, 1.0), 6), std::invalid_argument);  // 8/2+1 = 5 bins
}

TEST_CASE("trend branch: identity map, constant map, gradient") {
  DecompBranchParams params;
  params.trend_weight = Tensor::identity(3);
  params.trend_bias = Tensor({3});
  std::mt19937_64 rng(3);
  Tensor trend = random_tensor({6, 3}, rng);
  CHECK(trend_branch(trend, params).values() == trend.values());

  params.trend_weight = Tensor({3, 3});
  params.trend_bias = Tensor({3}, {1.0, 2.0, 3.0});
  Tensor constant_rows = trend_branch(trend, params);
  for (std::size_t r = 0; r < 6; ++r) {
    CHECK(constant_rows.at(r * 3 + 0) == 1.0);
    CHECK(constant_rows.at(r * 3 + 1) == 2.0);
    CHECK(constant_rows.at(r * 3 + 2) == 3.0);
  }

  DecompBranchParams learned = small_params(3, 6, 5);
  Tensor readout = random_tensor({6, 6}, rng);
  auto fn = [&](const Tensor& w) {
    DecompBranchParams probe = learned;
    probe.trend_weight = w;
    return weighted_sum(trend_branch(trend, probe), readout);
  };
  CHECK(finite_difference_check(fn, learned.trend_weight, 1e-5) < 1e-5);
}

TEST_CASE("period branch: zero input, causality, gradient") {
  DecompBranchParams params = small_params(2, 4, 9);
  Tensor zeros({8, 2});
  Tensor quiet = period_branch(zeros, params);
  for (double v : quiet.values()) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

  std::mt19937_64 rng(10);
  Tensor pure = random_tensor({8, 2}, rng);
  Tensor full = period_branch(pure, params);
  // zero everything from time 5 on; outputs before 5 must not move
  Tensor truncated = pure.detached_copy();
  for (std::size_t t = 5; t < 8; ++t) {
    for (std::size_t f = 0; f < 2; ++f) truncated.mutable_values()[t * 2 + f] = 0.0;
  }
  Tensor clipped = period_branch(truncated, params);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t c = 0; c < full.cols(); ++c) {
      CHECK(clipped.at(t * full.cols() + c) == full.at(t * full.cols() + c));
    }
  }

  Tensor readout = random_tensor({8, 4}, rng);
  auto fn = [&](const Tensor& k) {
    DecompBranchParams probe = params;
    probe.kernels[1] = k;
    return weighted_sum(period_branch(pure, probe), readout);
  };
  CHECK(finite_difference_check(fn, params.kernels[1], 1e-5) < 1e-5);
}

TEST_CASE("decomposition forward: constant window reduces to the trend branch") {
  DecompBranchParams params = small_params(2, 4, 77);
  Tensor window({12, 2}, std::vector<double>(24, 1.75));
  Tensor out = decomposition_forward(window, params, 4, 3);
  CHECK(out.shape() == Shape{12, 4});

  DecompositionResult parts = decompose_window(window, 4, 3);
  Tensor trend_only = trend_branch(parts.trend, params);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.at(i) == doctest::Approx(trend_only.at(i)).epsilon(1e-12));
  }
}

TEST_CASE("decomposition forward: end-to-end gradient over every branch parameter") {
  std::mt19937_64 rng(31);
  ModelConfig config;
  config.input_len = 10;
  config.avg_window = 4;
  config.top_k = 3;
  config.node_channels = 2;
  config.decomp_conv_channels = 2;
  std::mt19937_64 init_rng(2);
  DecompBranchParams params = init_model_params(config, 2, init_rng).decomp;
  Tensor window = random_tensor({10, 2}, rng);
  Tensor readout = random_tensor({10, 4}, rng);

  std::vector<Tensor> leaves = {params.trend_weight, params.trend_bias, params.fuse_weight, params.fuse_bias};
  for (const Tensor& k : params.kernels) leaves.push_back(k);
  for (const Tensor& b : params.kernel_biases) leaves.push_back(b);
  auto loss = [&] { return weighted_sum(decomposition_forward(window, params, config.avg_window, config.top_k), readout); };
  CHECK(finite_difference_check_params(loss, leaves, 1e-5) < 1e-4);
}

TEST_CASE("energy of the purified period never exceeds the raw period") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor window = random_tensor({16, 3}, rng, -5.0, 5.0);
    DecompositionResult r = decompose_window(window, 5, 3);
    double raw = 0.0, pure = 0.0;
    for (std::size_t i = 0; i < r.raw_period.size(); ++i) {
      raw += r.raw_period.at(i) * r.raw_period.at(i);
      pure += r.pure_period.at(i) * r.pure_period.at(i);
    }
    CHECK(pure <= raw + 1e-9);
  }
}
