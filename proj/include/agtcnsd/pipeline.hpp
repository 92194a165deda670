#pragma once

#include <array>
#include <string>
#include <vector>

#include "agtcnsd/timeseries.hpp"

namespace agtcnsd {

/// Supervised sliding windows: inputs[i] is a row-major [input_len x width]
/// block, targets[i] the next `horizon` values of the target column.
struct WindowedDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::size_t input_len = 0;
  std::size_t horizon = 0;
  std::vector<std::string> feature_names;
  std::string target_name;

  std::size_t count() const { return inputs.size(); }
};

/// Pauta (3-sigma) criterion: flags cells whose absolute gap from the
/// column mean strictly exceeds three population standard deviations.
/// Mean and sigma use valid cells only.
TimeSeriesFrame flag_outliers_pauta(const TimeSeriesFrame& frame);

/// Replaces missing/outlier cells by linear interpolation between the
/// nearest valid neighbours; leading/trailing gaps take the nearest valid
/// value. Valid cells pass through bitwise unchanged.
TimeSeriesFrame interpolate_linear(const TimeSeriesFrame& frame);

/// Keeps every factor-th row starting at index 0.
TimeSeriesFrame downsample(const TimeSeriesFrame& frame, std::size_t factor);

/// Pearson correlation coefficient. Throws when either input is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Columns with |r(column, target)| > threshold, target first, the rest in
/// descending |r|. Near-duplicate pairs (mutual |r| > 0.95) keep only the
/// member better correlated with the target.
std::vector<std::string> select_features(const TimeSeriesFrame& frame, const std::string& target_column,
                                         double threshold);

TimeSeriesFrame keep_columns(const TimeSeriesFrame& frame, const std::vector<std::string>& names);

NormalizationStats fit_minmax(const TimeSeriesFrame& frame);
/// (x - min) / (max - min) per column; a column with max == min maps to 0.
/// Values outside the fitted range are not clamped.
TimeSeriesFrame apply_minmax(const TimeSeriesFrame& frame, const NormalizationStats& stats);
std::pair<TimeSeriesFrame, NormalizationStats> minmax_fit_transform(const TimeSeriesFrame& frame,
                                                                    const NormalizationStats* stats = nullptr);
/// Inverse map for one column (used to report metrics on the raw scale).
double denormalize_value(double v, const NormalizationStats& stats, const std::string& column);

WindowedDataset make_windows(const TimeSeriesFrame& frame, const std::string& target_column, std::size_t input_len,
                             std::size_t horizon);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

/// Windows assigned in time order; train takes floor(n*train), val takes
/// floor(n*val), test takes the remaining tail.
std::array<WindowedDataset, 3> chronological_split(const WindowedDataset& dataset, const SplitFractions& fractions);

}  // namespace agtcnsd
