#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "agtcnsd/checkpoint.hpp"
#include "agtcnsd/decomposition.hpp"
#include "agtcnsd/experiment.hpp"
#include "agtcnsd/graph.hpp"
#include "agtcnsd/metrics.hpp"
#include "agtcnsd/model.hpp"
#include "agtcnsd/pipeline.hpp"
#include "agtcnsd/runconfig.hpp"
#include "agtcnsd/synthetic.hpp"
#include "agtcnsd/tcn.hpp"
#include "agtcnsd/tensor.hpp"

namespace py = pybind11;
using namespace agtcnsd;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DoubleArray& array) {
  Shape shape(array.ndim());
  for (py::ssize_t d = 0; d < array.ndim(); ++d) shape[static_cast<std::size_t>(d)] = static_cast<std::size_t>(array.shape(d));
  std::vector<double> values(array.data(), array.data() + array.size());
  return Tensor(std::move(shape), std::move(values));
}

py::array_t<double> array_from_tensor(const Tensor& tensor) {
  std::vector<py::ssize_t> shape(tensor.shape().begin(), tensor.shape().end());
  py::array_t<double> out(shape);
  std::copy(tensor.values().begin(), tensor.values().end(), out.mutable_data());
  return out;
}

std::vector<double> vector_from_array(const DoubleArray& array) {
  return {array.data(), array.data() + array.size()};
}

class Forecaster {
 public:
  explicit Forecaster(const std::string& path) : checkpoint_(load_checkpoint(path)) {}

  py::array_t<double> predict_window(const DoubleArray& window) const {
    NoGradGuard guard;
    if (window.ndim() != 2) throw std::invalid_argument("predict: expects a [input_len x features] window");
    Tensor batch({1, static_cast<std::size_t>(window.shape(0)), static_cast<std::size_t>(window.shape(1))},
                 vector_from_array(window));
    Tensor pred = model_forward(batch, checkpoint_.params, checkpoint_.config);
    return array_from_tensor(reshape(pred, {checkpoint_.config.horizon}));
  }

  std::size_t input_len() const { return checkpoint_.config.input_len; }
  std::size_t horizon() const { return checkpoint_.config.horizon; }
  std::vector<std::string> features() const { return checkpoint_.feature_names; }
  std::string target() const { return checkpoint_.target_name; }

 private:
  Checkpoint checkpoint_;
};

py::dict train_on_csv(const std::string& csv_path, const std::string& config_json,
                      const std::string& checkpoint_path, const std::string& stats_path) {
  RunConfig config = config_json.empty() ? RunConfig{} : RunConfig::from_json(config_json);
  TimeSeriesFrame frame = load_csv(csv_path);
  WindowedDataset windows = make_windows(frame, config.target_column, config.model.input_len, config.model.horizon);
  auto splits = chronological_split(windows, config.split);
  TrainResult result = train(splits[0], splits[1], config.model);

  Checkpoint checkpoint;
  checkpoint.config = config.model;
  checkpoint.feature_names = frame.names;
  checkpoint.target_name = config.target_column;
  if (stats_path.empty()) {
    for (const auto& name : frame.names) checkpoint.stats.ranges[name] = {0.0, 1.0};
  } else {
    checkpoint.stats = NormalizationStats::load(stats_path);
  }
  checkpoint.params = std::move(result.params);
  save_checkpoint(checkpoint, checkpoint_path);

  py::dict history;
  history["train_loss"] = result.history.train_loss;
  history["val_loss"] = result.history.val_loss;
  history["best_epoch"] = result.history.best_epoch;
  return history;
}

}  // namespace

PYBIND11_MODULE(_agtcnsd, m) {
  m.doc() = "Chlorophyll forecasting core: series decomposition, adaptive graph convolution, temporal convolution";

  m.def(
      "pearson",
      [](const DoubleArray& x, const DoubleArray& y) { return pearson(vector_from_array(x), vector_from_array(y)); },
      py::arg("x"), py::arg("y"), "Pearson correlation coefficient of two equal-length series");

  m.def(
      "compute_metrics",
      [](const DoubleArray& y, const DoubleArray& y_hat, double mape_epsilon) {
        MetricTriple t = compute_metrics(vector_from_array(y), vector_from_array(y_hat), mape_epsilon);
        py::dict out;
        out["mae"] = t.mae;
        out["rmse"] = t.rmse;
        out["mape"] = t.mape;
        return out;
      },
      py::arg("y"), py::arg("y_hat"), py::arg("mape_epsilon") = 1e-8, "MAE / RMSE / MAPE of a prediction");

  m.def(
      "moving_average_decompose",
      [](const DoubleArray& window, std::size_t avg_window) {
        NoGradGuard guard;
        DecompositionResult r = moving_average_decompose(tensor_from_array(window), avg_window);
        return py::make_tuple(array_from_tensor(r.trend), array_from_tensor(r.raw_period));
      },
      py::arg("window"), py::arg("avg_window"),
      "Split a [T x F] window into (trend, raw_period); trend + raw_period == window");

  m.def(
      "fft_topk_filter",
      [](const DoubleArray& series, std::size_t k) {
        std::vector<double> out = fft_topk_filter(vector_from_array(series), k);
        const std::size_t n = out.size();
        return array_from_tensor(Tensor({n}, std::move(out)));
      },
      py::arg("series"), py::arg("k"), "Keep the k highest-power frequency bins of a series");

  m.def(
      "adaptive_adjacency",
      [](const DoubleArray& node_embedding) {
        NoGradGuard guard;
        return array_from_tensor(adaptive_adjacency(tensor_from_array(node_embedding)));
      },
      py::arg("node_embedding"), "Row-stochastic learned adjacency softmax(relu(E E^T))");

  m.def(
      "softmax_rows",
      [](const DoubleArray& x) {
        NoGradGuard guard;
        return array_from_tensor(softmax_rows(tensor_from_array(x)));
      },
      py::arg("x"));

  m.def(
      "dilated_causal_conv",
      [](const DoubleArray& x, const DoubleArray& kernel, std::size_t dilation) {
        NoGradGuard guard;
        return array_from_tensor(dilated_causal_conv(tensor_from_array(x), tensor_from_array(kernel), dilation));
      },
      py::arg("x"), py::arg("kernel"), py::arg("dilation") = 1,
      "Causal convolution along time; x is [T x C_in], kernel [k x C_in x C_out]");

  m.def(
      "generate_synthetic",
      [](std::size_t n_steps, std::size_t n_features, std::uint64_t seed, double coupling_strength,
         double noise_sigma) {
        TimeSeriesFrame frame = generate_synthetic(n_steps, n_features, seed, coupling_strength, noise_sigma);
        py::dict out;
        out["names"] = frame.names;
        out["timestamps"] = frame.timestamps;
        py::array_t<double> values({frame.length(), frame.width()});
        auto v = values.mutable_unchecked<2>();
        for (std::size_t t = 0; t < frame.length(); ++t) {
          for (std::size_t c = 0; c < frame.width(); ++c) v(t, c) = frame.columns[c][t];
        }
        out["values"] = values;
        return out;
      },
      py::arg("n_steps"), py::arg("n_features"), py::arg("seed") = 0, py::arg("coupling_strength") = 0.8,
      py::arg("noise_sigma") = 0.05, "Reproducible surrogate sensor data (columns ordered as `names`)");

  m.def("default_config_json", [] { return RunConfig{}.to_json(); },
        "The default run configuration as a JSON string");

  m.def("train_on_csv", &train_on_csv, py::arg("csv_path"), py::arg("config_json") = "",
        py::arg("checkpoint_path") = "model.ckpt", py::arg("stats_path") = "",
        "Train on a preprocessed CSV and write a checkpoint; returns the loss history");

  py::class_<Forecaster>(m, "Forecaster")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("predict_window", &Forecaster::predict_window, py::arg("window"),
           "Forecast `horizon` normalized target values from one [input_len x features] window")
      .def_property_readonly("input_len", &Forecaster::input_len)
      .def_property_readonly("horizon", &Forecaster::horizon)
      .def_property_readonly("features", &Forecaster::features)
      .def_property_readonly("target", &Forecaster::target);
}
