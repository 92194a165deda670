#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agtcnsd/timeseries.hpp"

namespace agtcnsd {

/// Closed-form recipe behind one generated frame. Exposed so tests can
/// evaluate the noise-free signal independently of the generator loop.
struct SyntheticSpec {
  struct Wave {
    double amplitude = 0.0;
    double period = 1.0;  // in steps
    double phase = 0.0;
  };
  struct Feature {
    std::string name;
    double base = 0.0;
    double slope = 0.0;  // per step
    std::vector<Wave> waves;
  };
  struct Coupling {
    std::size_t source;  // feature index >= 1
    std::size_t lag;     // steps
    double weight;
  };
  std::vector<Feature> features;   // index 0 is the target
  std::vector<Coupling> couplings; // applied to the target, scaled by strength
  double noise_sigma = 0.05;

  /// Noise-free value of feature f at step t, before coupling.
  double base_value(std::size_t f, std::size_t t) const;
};

SyntheticSpec make_synthetic_spec(std::size_t n_features, std::uint64_t seed, double noise_sigma = 0.05);

/// Deterministic surrogate sensor series: per feature a mild linear trend,
/// a slow wave and two faster seeded sinusoids plus Gaussian noise; the
/// target additionally accumulates lagged values of the other features
/// scaled by coupling_strength. Timestamps step every 30 minutes.
TimeSeriesFrame generate_synthetic(std::size_t n_steps, std::size_t n_features, std::uint64_t seed,
                                   double coupling_strength, double noise_sigma = 0.05);

}  // namespace agtcnsd
