#include "agtcnsd/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace agtcnsd {

namespace {

const char* kParameterNames[] = {"Temp", "Sal",     "SpCond", "Cond",   "DO_pct", "DO_ppm", "pH",
                                 "Turb", "TDS",     "PE",     "Chl_RFU", "PE_RFU", "pH_mV"};

}  // namespace

double SyntheticSpec::base_value(std::size_t f, std::size_t t) const {
  const Feature& feature = features.at(f);
  double v = feature.base + feature.slope * static_cast<double>(t);
  for (const Wave& wave : feature.waves) {
    v += wave.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / wave.period + wave.phase);
  }
  return v;
}

SyntheticSpec make_synthetic_spec(std::size_t n_features, std::uint64_t seed, double noise_sigma) {
  if (n_features < 2) throw std::invalid_argument("synthetic: need at least 2 features");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SyntheticSpec spec;
  spec.noise_sigma = noise_sigma;
  for (std::size_t f = 0; f < n_features; ++f) {
    SyntheticSpec::Feature feature;
    if (f == 0) {
      feature.name = "Chl";
    } else {
      const std::size_t idx = f - 1;
      feature.name = idx < std::size(kParameterNames)
                         ? kParameterNames[idx]
                         : "P" + std::to_string(idx + 1);
    }
    feature.base = uniform(2.0, 4.0);
    feature.slope = uniform(-1e-4, 1e-4);
    // One slow wave plus two short-period waves. Periods are geometrically
    // separated across features (distinct frequencies, small jitter), so
    // uncoupled features stay near-orthogonal no matter the seed.
    const double spread = std::pow(1.16, static_cast<double>(f));
    feature.waves.push_back({uniform(0.08, 0.2), 500.0 * spread * uniform(0.98, 1.02),
                             uniform(0.0, 2.0 * std::numbers::pi)});
    feature.waves.push_back({uniform(0.4, 0.9), 9.0 * spread * uniform(0.98, 1.02),
                             uniform(0.0, 2.0 * std::numbers::pi)});
    feature.waves.push_back({uniform(0.3, 0.7), 40.0 * spread * uniform(0.98, 1.02),
                             uniform(0.0, 2.0 * std::numbers::pi)});
    spec.features.push_back(std::move(feature));
  }
  for (std::size_t f = 1; f < n_features; ++f) {
    SyntheticSpec::Coupling c;
    c.source = f;
    c.lag = 1 + static_cast<std::size_t>(uniform(0.0, 3.999));
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    c.weight = sign * uniform(0.5, 1.0) / static_cast<double>(n_features - 1);
    spec.couplings.push_back(c);
  }
  return spec;
}

TimeSeriesFrame generate_synthetic(std::size_t n_steps, std::size_t n_features, std::uint64_t seed,
                                   double coupling_strength, double noise_sigma) {
  if (n_steps < 200) throw std::invalid_argument("synthetic: n_steps must be >= 200");
  if (n_features < 2) throw std::invalid_argument("synthetic: need at least 2 features");

  const SyntheticSpec spec = make_synthetic_spec(n_features, seed, noise_sigma);
  std::mt19937_64 noise_rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TimeSeriesFrame frame;
  frame.columns.resize(n_features);
  frame.flags.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    frame.names.push_back(spec.features[f].name);
    frame.columns[f].resize(n_steps);
    frame.flags[f].assign(n_steps, CellFlag::valid);
  }

  const std::int64_t start = parse_iso8601("2020-01-01T00:00:00");
  frame.time_points.resize(n_steps);
  frame.timestamps.resize(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    frame.time_points[t] = start + static_cast<std::int64_t>(t) * 1800;  // 30-minute cadence
    frame.timestamps[t] = format_iso8601(frame.time_points[t]);
  }

  // Non-target features first; the target couples to their realized values.
  for (std::size_t f = 1; f < n_features; ++f) {
    for (std::size_t t = 0; t < n_steps; ++t) {
      frame.columns[f][t] = spec.base_value(f, t) + noise_sigma * gauss(noise_rng);
    }
  }
  for (std::size_t t = 0; t < n_steps; ++t) {
    double v = spec.base_value(0, t);
    for (const auto& c : spec.couplings) {
      const std::size_t src_t = t >= c.lag ? t - c.lag : 0;
      v += coupling_strength * c.weight * frame.columns[c.source][src_t];
    }
    frame.columns[0][t] = v + noise_sigma * gauss(noise_rng);
  }
  return frame;
}

}  // namespace agtcnsd
