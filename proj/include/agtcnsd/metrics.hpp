#pragma once

#include <vector>

namespace agtcnsd {

struct MetricTriple {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
};

/// MAE, RMSE and MAPE with fixed left-to-right summation. MAPE denominators
/// are max(|y_i|, mape_epsilon) so zero targets cannot divide by zero.
MetricTriple compute_metrics(const std::vector<double>& y, const std::vector<double>& y_hat,
                             double mape_epsilon = 1e-8);

}  // namespace agtcnsd
