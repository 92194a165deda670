#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "agtcnsd/gradcheck.hpp"
#include "agtcnsd/tcn.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace agtcnsd;
using testsupport::random_tensor;
using testsupport::weighted_sum;

namespace {

TcnLayerParams random_block(std::size_t c_in, std::size_t reduced, std::size_t c_out, std::size_t k,
                            std::mt19937_64& rng, bool use_reduction = true) {
  TcnLayerParams p;
  if (use_reduction) {
    p.reduction_weight = random_tensor({c_in, reduced}, rng);
    p.reduction_bias = random_tensor({reduced}, rng);
  }
  p.kernel = random_tensor({k, use_reduction ? reduced : c_in, c_out}, rng);
  p.conv_bias = random_tensor({c_out}, rng);
  if (c_in != c_out) p.residual_weight = random_tensor({c_in, c_out}, rng);
  return p;
}

}  // namespace

TEST_CASE("dilated conv: worked example with zero left padding") {
  Tensor x({4, 1}, {1.0, 2.0, 3.0, 4.0});
  Tensor f({2, 1, 1}, {1.0, 1.0});
  Tensor y = dilated_causal_conv(x, f, 2);
  CHECK(y.values() == std::vector<double>{1.0, 2.0, 4.0, 6.0});
}

TEST_CASE("dilated conv: unit impulse kernel is the identity") {
  std::mt19937_64 rng(1);
  Tensor x = random_tensor({7, 3}, rng);
  Tensor f({2, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) f.mutable_values()[c * 3 + c] = 1.0;  // tap i=0 identity, tap i=1 zero
  Tensor y = dilated_causal_conv(x, f, 1);
  CHECK(y.values() == x.values());
}

TEST_CASE("dilated conv: perturbing time t never changes outputs before t") {
  std::mt19937_64 rng(2);
  Tensor x = random_tensor({10, 2}, rng);
  Tensor f = random_tensor({3, 2, 2}, rng);
  Tensor base = dilated_causal_conv(x, f, 2);
  for (std::size_t t = 1; t < 10; ++t) {
    Tensor poked = x.detached_copy();
    poked.mutable_values()[t * 2] += 5.0;
    Tensor moved = dilated_causal_conv(poked, f, 2);
    for (std::size_t s = 0; s < t; ++s) {
      for (std::size_t c = 0; c < 2; ++c) CHECK(moved.at2(s, c) == base.at2(s, c));
    }
  }
}

TEST_CASE("dilated conv: batch rows pad independently") {
  Tensor one({4, 1}, {1.0, 2.0, 3.0, 4.0});
  Tensor f({2, 1, 1}, {1.0, 1.0});
  Tensor single = dilated_causal_conv(one, f, 2);
  Tensor stacked({8, 1}, {1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0});
  Tensor both = dilated_causal_conv(stacked, f, 2, 2);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(both.at(t) == single.at(t));
    CHECK(both.at(4 + t) == single.at(t));
  }
  CHECK_THROWS_AS(dilated_causal_conv(stacked, f, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(dilated_causal_conv(stacked, f, 0), std::invalid_argument);
}

TEST_CASE("dilated conv gradient (input and kernel)") {
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({6, 2}, rng);
  Tensor f = random_tensor({3, 2, 2}, rng);
  x.set_requires_grad(true);
  f.set_requires_grad(true);
  Tensor readout = random_tensor({6, 2}, rng);
  auto loss = [&] { return weighted_sum(dilated_causal_conv(x, f, 2), readout); };
  CHECK(finite_difference_check_params(loss, {x, f}, 1e-5) < 1e-5);
}

TEST_CASE("tcn block: zero kernel with identity residual passes the input through") {
  TcnLayerParams p;
  p.kernel = Tensor({3, 2, 2});  // zeros
  p.conv_bias = Tensor({2});
  std::mt19937_64 rng(4);
  Tensor x = random_tensor({5, 2}, rng);
  Tensor y = tcn_block(x, p, 1);
  CHECK(y.values() == x.values());
}

TEST_CASE("tcn block: all-zero input with zero biases stays zero") {
  std::mt19937_64 rng(5);
  TcnLayerParams p = random_block(3, 2, 3, 3, rng);
  p.reduction_bias = Tensor({2});
  p.conv_bias = Tensor({3});
  Tensor zeros({6, 3});
  Tensor quiet = tcn_block(zeros, p, 2);
  for (double v : quiet.values()) CHECK(v == 0.0);
}

TEST_CASE("tcn block gradient across every parameter") {
  std::mt19937_64 rng(6);
  TcnLayerParams p = random_block(3, 2, 4, 3, rng);
  for (Tensor* t : {&p.reduction_weight, &p.reduction_bias, &p.kernel, &p.conv_bias, &p.residual_weight}) {
    t->set_requires_grad(true);
  }
  Tensor x = random_tensor({6, 3}, rng);
  x.set_requires_grad(true);
  Tensor readout = random_tensor({6, 4}, rng);
  auto loss = [&] { return weighted_sum(tcn_block(x, p, 2), readout); };
  CHECK(finite_difference_check_params(
            loss, {x, p.reduction_weight, p.reduction_bias, p.kernel, p.conv_bias, p.residual_weight}, 1e-5) < 1e-5);
}

TEST_CASE("receptive field: 1 + (k-1) * sum(dilations) = 31 at defaults") {
  TcnConfig config;
  CHECK(config.receptive_field() == 31);

  // Single channel, all-ones kernels, no reduction, identity residual:
  // a positive impulse at t=0 reaches exactly [0, 30].
  config.use_reduction = false;
  config.channels = 1;
  std::vector<TcnLayerParams> params;
  for (std::size_t l = 0; l < 4; ++l) {
    TcnLayerParams p;
    p.kernel = Tensor({3, 1, 1}, {1.0, 1.0, 1.0});
    p.conv_bias = Tensor({1});
    params.push_back(std::move(p));
  }
  Tensor impulse({40, 1});
  impulse.mutable_values()[0] = 1.0;
  Tensor response = tcn_forward(impulse, config, params);
  for (std::size_t t = 0; t <= 30; ++t) CHECK(response.at(t) > 0.0);
  for (std::size_t t = 31; t < 40; ++t) CHECK(response.at(t) == 0.0);

  // Shifted impulse: support shifts with it.
  Tensor shifted({40, 1});
  shifted.mutable_values()[5] = 1.0;
  Tensor moved = tcn_forward(shifted, config, params);
  for (std::size_t t = 0; t < 5; ++t) CHECK(moved.at(t) == 0.0);
  for (std::size_t t = 5; t <= 35; ++t) CHECK(moved.at(t) > 0.0);
  for (std::size_t t = 36; t < 40; ++t) CHECK(moved.at(t) == 0.0);
}

TEST_CASE("strict causality of the full stack at every cut point") {
  std::mt19937_64 rng(7);
  TcnConfig config;
  config.channels = 3;
  config.reduced_width = 2;
  std::vector<TcnLayerParams> params;
  params.push_back(random_block(2, 2, 3, 3, rng));
  for (std::size_t l = 1; l < 4; ++l) params.push_back(random_block(3, 2, 3, 3, rng));

  const std::size_t t_len = 12;
  Tensor x = random_tensor({t_len, 2}, rng);
  Tensor base = tcn_forward(x, config, params);
  for (std::size_t cut = 1; cut < t_len; ++cut) {
    Tensor clipped = x.detached_copy();
    for (std::size_t t = cut; t < t_len; ++t) {
      for (std::size_t c = 0; c < 2; ++c) clipped.mutable_values()[t * 2 + c] = 0.0;
    }
    Tensor y = tcn_forward(clipped, config, params);
    CHECK(y.rows() == t_len);  // shape preserved
    for (std::size_t t = 0; t < cut; ++t) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(y.at2(t, c) == base.at2(t, c));
    }
  }
}

TEST_CASE("tcn forward: config consistency checks") {
  std::mt19937_64 rng(8);
  TcnConfig config;
  config.dilations = {1, 2};  // wrong length for 4 layers
  std::vector<TcnLayerParams> params(4);
  CHECK_THROWS_AS(tcn_forward(Tensor({4, 1}), config, params), std::invalid_argument);

  TcnConfig two;
  two.n_layers = 2;
  two.dilations = {1, 2};
  std::vector<TcnLayerParams> one_param = {random_block(1, 1, 1, 3, rng)};
  CHECK_THROWS_AS(tcn_forward(Tensor({4, 1}), two, one_param), std::invalid_argument);
}

TEST_CASE("tcn stack gradient end to end") {
  std::mt19937_64 rng(9);
  TcnConfig config;
  config.n_layers = 2;
  config.dilations = {1, 2};
  config.channels = 2;
  config.reduced_width = 2;
  std::vector<TcnLayerParams> params;
  params.push_back(random_block(3, 2, 2, 3, rng));
  params.push_back(random_block(2, 2, 2, 3, rng));
  std::vector<Tensor> leaves;
  for (auto& p : params) {
    for (Tensor* t : {&p.reduction_weight, &p.reduction_bias, &p.kernel, &p.conv_bias, &p.residual_weight}) {
      if (t->defined()) {
        t->set_requires_grad(true);
        leaves.push_back(*t);
      }
    }
  }
  Tensor x = random_tensor({16, 3}, rng);
  x.set_requires_grad(true);
  leaves.push_back(x);
  Tensor readout = random_tensor({16, 2}, rng);
  auto loss = [&] { return weighted_sum(tcn_forward(x, config, params), readout); };
  CHECK(finite_difference_check_params(loss, leaves, 1e-5) < 1e-4);
}
