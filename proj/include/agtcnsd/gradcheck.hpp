#pragma once

#include <functional>
#include <vector>

#include "agtcnsd/tensor.hpp"

namespace agtcnsd {

/// Compares the tape gradient of fn at x against central finite differences.
/// Returns max over coordinates of |analytic - difference| / (|difference| + 1e-12).
/// fn must be deterministic and must build its value through tape ops.
double finite_difference_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x, double step);

/// Same check for a parametric loss: perturbs every coordinate of every
/// tensor in params while loss_fn() re-runs the full forward pass.
double finite_difference_check_params(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                                      double step);

}  // namespace agtcnsd
