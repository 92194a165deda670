#include "agtcnsd/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace agtcnsd {

MetricTriple compute_metrics(const std::vector<double>& y, const std::vector<double>& y_hat, double mape_epsilon) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  if (y.empty()) throw std::invalid_argument("compute_metrics: empty input");
  const double n = static_cast<double>(y.size());
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - y_hat[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    pct_sum += std::abs(e) / std::max(std::abs(y[i]), mape_epsilon);
  }
  return {abs_sum / n, std::sqrt(sq_sum / n), pct_sum / n};
}

}  // namespace agtcnsd
