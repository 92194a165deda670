#include "agtcnsd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agtcnsd {

namespace {

struct Moments {
  double mean = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::size_t valid = 0;
};

Moments valid_moments(const std::vector<double>& values, const std::vector<CellFlag>& flags) {
  Moments m;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (flags[i] == CellFlag::valid) {
      sum += values[i];
      ++m.valid;
    }
  }
  if (m.valid == 0) return m;
  m.mean = sum / static_cast<double>(m.valid);
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (flags[i] == CellFlag::valid) {
      const double d = values[i] - m.mean;
      ss += d * d;
    }
  }
  m.sigma = std::sqrt(ss / static_cast<double>(m.valid));
  return m;
}

}  // namespace

TimeSeriesFrame flag_outliers_pauta(const TimeSeriesFrame& frame) {
  TimeSeriesFrame out = frame;
  for (std::size_t c = 0; c < out.width(); ++c) {
    const Moments m = valid_moments(out.columns[c], out.flags[c]);
    if (m.valid < 2) {
      throw std::runtime_error("pauta: column '" + out.names[c] + "' has fewer than 2 valid cells");
    }
    const double limit = 3.0 * m.sigma;
    for (std::size_t t = 0; t < out.length(); ++t) {
      if (out.flags[c][t] == CellFlag::valid && std::abs(out.columns[c][t] - m.mean) > limit) {
        out.flags[c][t] = CellFlag::outlier;
      }
    }
  }
  return out;
}

TimeSeriesFrame interpolate_linear(const TimeSeriesFrame& frame) {
  TimeSeriesFrame out = frame;
  for (std::size_t c = 0; c < out.width(); ++c) {
    auto& values = out.columns[c];
    auto& flags = out.flags[c];
    std::vector<std::size_t> valid_idx;
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (flags[t] == CellFlag::valid) valid_idx.push_back(t);
    }
    if (valid_idx.empty()) {
      throw std::runtime_error("interpolate: column '" + out.names[c] + "' has no valid cells");
    }
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (flags[t] == CellFlag::valid) continue;
      auto next = std::lower_bound(valid_idx.begin(), valid_idx.end(), t);
      if (next == valid_idx.begin()) {
        values[t] = values[valid_idx.front()];  // leading gap: constant extension
      } else if (next == valid_idx.end()) {
        values[t] = values[valid_idx.back()];  // trailing gap
      } else {
        const std::size_t hi = *next;
        const std::size_t lo = *(next - 1);
        const double w = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
        values[t] = values[lo] + (values[hi] - values[lo]) * w;
      }
      flags[t] = CellFlag::valid;
    }
  }
  return out;
}

TimeSeriesFrame downsample(const TimeSeriesFrame& frame, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1) return frame;
  TimeSeriesFrame out;
  out.names = frame.names;
  out.columns.resize(frame.width());
  out.flags.resize(frame.width());
  for (std::size_t t = 0; t < frame.length(); t += factor) {
    out.timestamps.push_back(frame.timestamps[t]);
    out.time_points.push_back(frame.time_points[t]);
    for (std::size_t c = 0; c < frame.width(); ++c) {
      out.columns[c].push_back(frame.columns[c][t]);
      out.flags[c].push_back(frame.flags[c][t]);
    }
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: inputs must have equal length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - mx;
    const double b = y[i] - my;
    num += a * b;
    dx += a * a;
    dy += b * b;
  }
  if (dx == 0.0 || dy == 0.0) {
    throw std::invalid_argument("pearson: correlation undefined for constant input");
  }
  return num / (std::sqrt(dx) * std::sqrt(dy));
}

std::vector<std::string> select_features(const TimeSeriesFrame& frame, const std::string& target_column,
                                         double threshold) {
  if (threshold < 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("select_features: threshold must lie in [0, 1)");
  }
  const std::size_t target = frame.column_index(target_column);

  struct Scored {
    std::size_t index;
    double abs_r;
  };
  std::vector<Scored> passing;
  for (std::size_t c = 0; c < frame.width(); ++c) {
    if (c == target) continue;
    double r;
    try {
      r = pearson(frame.columns[c], frame.columns[target]);
    } catch (const std::invalid_argument&) {
      continue;  // constant column carries no signal
    }
    if (std::abs(r) > threshold) passing.push_back({c, std::abs(r)});
  }
  std::stable_sort(passing.begin(), passing.end(),
                   [](const Scored& a, const Scored& b) { return a.abs_r > b.abs_r; });

  // Redundancy rule: near-duplicates (mutual |r| > 0.95) keep only the
  // better-correlated member; ties resolve to the earlier (stronger) one.
  std::vector<std::size_t> kept;
  for (const Scored& cand : passing) {
    bool duplicate = false;
    for (std::size_t k : kept) {
      const double mutual = pearson(frame.columns[cand.index], frame.columns[k]);
      if (std::abs(mutual) > 0.95) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(cand.index);
  }

  std::vector<std::string> result{target_column};
  for (std::size_t k : kept) result.push_back(frame.names[k]);
  return result;
}

TimeSeriesFrame keep_columns(const TimeSeriesFrame& frame, const std::vector<std::string>& names) {
  TimeSeriesFrame out;
  out.timestamps = frame.timestamps;
  out.time_points = frame.time_points;
  for (const std::string& name : names) {
    const std::size_t c = frame.column_index(name);
    out.names.push_back(name);
    out.columns.push_back(frame.columns[c]);
    out.flags.push_back(frame.flags[c]);
  }
  return out;
}

NormalizationStats fit_minmax(const TimeSeriesFrame& frame) {
  NormalizationStats stats;
  for (std::size_t c = 0; c < frame.width(); ++c) {
    if (frame.columns[c].empty()) throw std::invalid_argument("minmax: empty column '" + frame.names[c] + "'");
    double lo = frame.columns[c][0], hi = frame.columns[c][0];
    for (double v : frame.columns[c]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    stats.ranges[frame.names[c]] = {lo, hi};
  }
  return stats;
}

TimeSeriesFrame apply_minmax(const TimeSeriesFrame& frame, const NormalizationStats& stats) {
  TimeSeriesFrame out = frame;
  for (std::size_t c = 0; c < out.width(); ++c) {
    auto it = stats.ranges.find(out.names[c]);
    if (it == stats.ranges.end()) {
      throw std::invalid_argument("minmax: no stats for column '" + out.names[c] + "'");
    }
    const double lo = it->second.min;
    const double span = it->second.max - it->second.min;
    for (double& v : out.columns[c]) {
      v = span == 0.0 ? 0.0 : (v - lo) / span;
    }
  }
  return out;
}

std::pair<TimeSeriesFrame, NormalizationStats> minmax_fit_transform(const TimeSeriesFrame& frame,
                                                                    const NormalizationStats* stats) {
  NormalizationStats used = stats ? *stats : fit_minmax(frame);
  return {apply_minmax(frame, used), used};
}

double denormalize_value(double v, const NormalizationStats& stats, const std::string& column) {
  auto it = stats.ranges.find(column);
  if (it == stats.ranges.end()) throw std::invalid_argument("minmax: no stats for column '" + column + "'");
  return it->second.min + v * (it->second.max - it->second.min);
}

WindowedDataset make_windows(const TimeSeriesFrame& frame, const std::string& target_column, std::size_t input_len,
                             std::size_t horizon) {
  if (input_len == 0 || horizon == 0) throw std::invalid_argument("make_windows: input_len and horizon must be positive");
  const std::size_t target = frame.column_index(target_column);
  const std::size_t needed = input_len + horizon;
  if (frame.length() < needed) {
    throw std::invalid_argument("make_windows: frame has " + std::to_string(frame.length()) +
                                " rows, needs at least " + std::to_string(needed));
  }
  WindowedDataset ds;
  ds.input_len = input_len;
  ds.horizon = horizon;
  ds.feature_names = frame.names;
  ds.target_name = target_column;
  const std::size_t n_windows = frame.length() - needed + 1;
  ds.inputs.reserve(n_windows);
  ds.targets.reserve(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) {
    std::vector<double> input;
    input.reserve(input_len * frame.width());
    for (std::size_t t = i; t < i + input_len; ++t) {
      for (std::size_t c = 0; c < frame.width(); ++c) input.push_back(frame.columns[c][t]);
    }
    std::vector<double> target_values;
    target_values.reserve(horizon);
    for (std::size_t t = i + input_len; t < i + input_len + horizon; ++t) {
      target_values.push_back(frame.columns[target][t]);
    }
    ds.inputs.push_back(std::move(input));
    ds.targets.push_back(std::move(target_values));
  }
  return ds;
}

std::array<WindowedDataset, 3> chronological_split(const WindowedDataset& dataset, const SplitFractions& fractions) {
  if (fractions.train <= 0.0 || fractions.val <= 0.0 || fractions.test <= 0.0) {
    throw std::invalid_argument("split: all fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }
  const std::size_t n = dataset.count();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.train));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.val));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw std::invalid_argument("split: a split would be empty with " + std::to_string(n) + " windows");
  }

  auto take = [&](std::size_t begin, std::size_t end) {
    WindowedDataset part;
    part.input_len = dataset.input_len;
    part.horizon = dataset.horizon;
    part.feature_names = dataset.feature_names;
    part.target_name = dataset.target_name;
    part.inputs.assign(dataset.inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                       dataset.inputs.begin() + static_cast<std::ptrdiff_t>(end));
    part.targets.assign(dataset.targets.begin() + static_cast<std::ptrdiff_t>(begin),
                        dataset.targets.begin() + static_cast<std::ptrdiff_t>(end));
    return part;
  };
  return {take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

}  // namespace agtcnsd
