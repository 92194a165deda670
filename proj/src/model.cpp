#include "agtcnsd/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace agtcnsd {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive(input_len, "input_len");
  positive(horizon, "horizon");
  positive(avg_window, "avg_window");
  positive(top_k, "top_k");
  positive(decomp_conv_channels, "decomp_conv_channels");
  positive(gcn_layers, "gcn_layers");
  positive(embed_dim, "embed_dim");
  positive(factor_dim, "factor_dim");
  positive(node_channels, "node_channels");
  positive(tcn_layers, "tcn_layers");
  positive(tcn_kernel, "tcn_kernel");
  positive(tcn_channels, "tcn_channels");
  positive(tcn_reduced, "tcn_reduced");
  positive(batch_size, "batch_size");
  positive(epochs, "epochs");
  if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate must be positive");
  if (decomp_kernels != std::vector<std::size_t>{3, 5, 7}) {
    throw std::invalid_argument("config: decomposition kernel sizes must be exactly {3,5,7}");
  }
  if (tcn_dilations.size() != tcn_layers) {
    throw std::invalid_argument("config: tcn_dilations length must equal tcn_layers");
  }
  for (std::size_t d : tcn_dilations) positive(d, "tcn dilation");
  if (!use_tcn && !use_gcn && !use_decomposition) {
    throw std::invalid_argument("config: at least one module must be enabled");
  }
  if (top_k > input_len / 2 + 1) {
    throw std::invalid_argument("config: top_k exceeds the " + std::to_string(input_len / 2 + 1) +
                                " frequency bins of input_len " + std::to_string(input_len));
  }
}

TcnConfig ModelConfig::tcn_config() const {
  TcnConfig c;
  c.n_layers = tcn_layers;
  c.kernel_size = tcn_kernel;
  c.dilations = tcn_dilations;
  c.channels = tcn_channels;
  c.reduced_width = tcn_reduced;
  c.use_reduction = use_reduction;
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["input_len"] = input_len;
  j["horizon"] = horizon;
  j["avg_window"] = avg_window;
  j["top_k"] = top_k;
  j["decomp_kernels"] = decomp_kernels;
  j["decomp_conv_channels"] = decomp_conv_channels;
  j["gcn_layers"] = gcn_layers;
  j["embed_dim"] = embed_dim;
  j["factor_dim"] = factor_dim;
  j["node_channels"] = node_channels;
  j["tcn_layers"] = tcn_layers;
  j["tcn_kernel"] = tcn_kernel;
  j["tcn_dilations"] = tcn_dilations;
  j["tcn_channels"] = tcn_channels;
  j["tcn_reduced"] = tcn_reduced;
  j["use_decomposition"] = use_decomposition;
  j["use_gcn"] = use_gcn;
  j["use_tcn"] = use_tcn;
  j["use_reduction"] = use_reduction;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["stop_at_train_loss"] = stop_at_train_loss;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  static const char* known[] = {"input_len",      "horizon",       "avg_window",     "top_k",
                                "decomp_kernels", "decomp_conv_channels", "gcn_layers", "embed_dim",
                                "factor_dim",     "node_channels", "tcn_layers",     "tcn_kernel",
                                "tcn_dilations",  "tcn_channels",  "tcn_reduced",    "use_decomposition",
                                "use_gcn",        "use_tcn",       "use_reduction",  "batch_size",
                                "epochs",         "learning_rate", "seed",           "stop_at_train_loss"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return it.key() == k; }) == std::end(known)) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("input_len", c.input_len);
  get("horizon", c.horizon);
  get("avg_window", c.avg_window);
  get("top_k", c.top_k);
  get("decomp_kernels", c.decomp_kernels);
  get("decomp_conv_channels", c.decomp_conv_channels);
  get("gcn_layers", c.gcn_layers);
  get("embed_dim", c.embed_dim);
  get("factor_dim", c.factor_dim);
  get("node_channels", c.node_channels);
  get("tcn_layers", c.tcn_layers);
  get("tcn_kernel", c.tcn_kernel);
  get("tcn_dilations", c.tcn_dilations);
  get("tcn_channels", c.tcn_channels);
  get("tcn_reduced", c.tcn_reduced);
  get("use_decomposition", c.use_decomposition);
  get("use_gcn", c.use_gcn);
  get("use_tcn", c.use_tcn);
  get("use_reduction", c.use_reduction);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("learning_rate", c.learning_rate);
  get("seed", c.seed);
  get("stop_at_train_loss", c.stop_at_train_loss);
  c.validate();
  return c;
}

namespace {

std::size_t hidden_width(const ModelConfig& config, std::size_t n_features) {
  return n_features * config.node_channels;
}

std::size_t tcn_input_width(const ModelConfig& config, std::size_t n_features) {
  if (config.use_gcn || config.use_decomposition) return hidden_width(config, n_features);
  return n_features;
}

std::size_t head_input_width(const ModelConfig& config, std::size_t n_features) {
  if (config.use_tcn) return config.tcn_channels;
  return tcn_input_width(config, n_features);
}

Tensor normal_tensor(Shape shape, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_values()) v = dist(rng);
  t.set_requires_grad(true);
  return t;
}

// Fan-in-scaled normal draw: keeps activation variance roughly constant
// through linear maps and convolutions.
Tensor fan_in_tensor(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  return normal_tensor(std::move(shape), rng, 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Tensor zero_tensor(Shape shape) {
  Tensor t(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

ModelParams init_model_params(const ModelConfig& config, std::size_t n_features, std::mt19937_64& rng) {
  config.validate();
  if (n_features == 0) throw std::invalid_argument("init_model_params: need at least one feature");
  ModelParams p;
  const std::size_t hidden = hidden_width(config, n_features);

  if (config.use_decomposition) {
    p.decomp.trend_weight = normal_tensor({n_features, hidden}, rng, 0.1);
    p.decomp.trend_bias = zero_tensor({hidden});
    for (std::size_t k : config.decomp_kernels) {
      p.decomp.kernels.push_back(normal_tensor({k, n_features, config.decomp_conv_channels}, rng, 0.1));
      p.decomp.kernel_biases.push_back(zero_tensor({config.decomp_conv_channels}));
    }
    const std::size_t fused = config.decomp_kernels.size() * config.decomp_conv_channels;
    p.decomp.fuse_weight = normal_tensor({fused, hidden}, rng, 0.1);
    p.decomp.fuse_bias = zero_tensor({hidden});
  }

  if (config.use_gcn) {
    for (std::size_t l = 0; l < config.gcn_layers; ++l) {
      const std::size_t c_in = (l == 0 && !config.use_decomposition) ? 1 : config.node_channels;
      AdaptiveGraphParams g;
      // Small node-embedding entries keep the pre-softmax logits small, so
      // the initial adjacency starts near uniform. The factor tensors are
      // scaled so the generated per-node maps Theta_n = E_zeta . W_zeta
      // neither attenuate nor blow up node states.
      g.node_embedding = normal_tensor({n_features, config.embed_dim}, rng, 0.1);
      g.node_factor = normal_tensor({n_features, config.factor_dim}, rng, 1.0);
      g.weight_factor =
          fan_in_tensor({config.factor_dim, c_in, config.node_channels}, 2 * config.factor_dim * c_in, rng);
      g.bias_factor = normal_tensor({config.factor_dim, config.node_channels}, rng,
                                    0.1 / std::sqrt(static_cast<double>(config.factor_dim)));
      p.gcn.push_back(std::move(g));
    }
  }

  if (config.use_tcn) {
    const std::size_t width_in = tcn_input_width(config, n_features);
    for (std::size_t l = 0; l < config.tcn_layers; ++l) {
      const std::size_t c_in = l == 0 ? width_in : config.tcn_channels;
      TcnLayerParams t;
      if (config.use_reduction) {
        t.reduction_weight = normal_tensor({c_in, config.tcn_reduced}, rng, 0.1);
        t.reduction_bias = zero_tensor({config.tcn_reduced});
      }
      const std::size_t conv_in = config.use_reduction ? config.tcn_reduced : c_in;
      t.kernel = normal_tensor({config.tcn_kernel, conv_in, config.tcn_channels}, rng, 0.1);
      t.conv_bias = zero_tensor({config.tcn_channels});
      if (c_in != config.tcn_channels) {
        t.residual_weight = normal_tensor({c_in, config.tcn_channels}, rng, 0.1);
      }
      p.tcn.push_back(std::move(t));
    }
  }

  p.head_weight = normal_tensor({head_input_width(config, n_features), config.horizon}, rng, 0.1);
  p.head_bias = zero_tensor({config.horizon});
  return p;
}

std::vector<std::pair<std::string, Tensor>> named_parameters(const ModelParams& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push = [&out](const std::string& name, const Tensor& t) {
    if (t.defined()) out.emplace_back(name, t);
  };
  push("decomp.trend_weight", params.decomp.trend_weight);
  push("decomp.trend_bias", params.decomp.trend_bias);
  for (std::size_t i = 0; i < params.decomp.kernels.size(); ++i) {
    push("decomp.kernel" + std::to_string(i), params.decomp.kernels[i]);
    push("decomp.kernel_bias" + std::to_string(i), params.decomp.kernel_biases[i]);
  }
  push("decomp.fuse_weight", params.decomp.fuse_weight);
  push("decomp.fuse_bias", params.decomp.fuse_bias);
  for (std::size_t l = 0; l < params.gcn.size(); ++l) {
    const std::string base = "gcn." + std::to_string(l) + ".";
    push(base + "node_embedding", params.gcn[l].node_embedding);
    push(base + "node_factor", params.gcn[l].node_factor);
    push(base + "weight_factor", params.gcn[l].weight_factor);
    push(base + "bias_factor", params.gcn[l].bias_factor);
  }
  for (std::size_t l = 0; l < params.tcn.size(); ++l) {
    const std::string base = "tcn." + std::to_string(l) + ".";
    push(base + "reduction_weight", params.tcn[l].reduction_weight);
    push(base + "reduction_bias", params.tcn[l].reduction_bias);
    push(base + "kernel", params.tcn[l].kernel);
    push(base + "conv_bias", params.tcn[l].conv_bias);
    push(base + "residual_weight", params.tcn[l].residual_weight);
  }
  push("head.weight", params.head_weight);
  push("head.bias", params.head_bias);
  return out;
}

std::vector<Tensor> parameter_tensors(const ModelParams& params) {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters(params)) out.push_back(tensor);
  return out;
}

ModelParams clone_params(const ModelParams& params) {
  ModelParams c;
  auto dup = [](const Tensor& t) {
    if (!t.defined()) return Tensor();
    Tensor copy = t.detached_copy();
    copy.set_requires_grad(t.requires_grad());
    return copy;
  };
  c.decomp.trend_weight = dup(params.decomp.trend_weight);
  c.decomp.trend_bias = dup(params.decomp.trend_bias);
  for (const Tensor& k : params.decomp.kernels) c.decomp.kernels.push_back(dup(k));
  for (const Tensor& b : params.decomp.kernel_biases) c.decomp.kernel_biases.push_back(dup(b));
  c.decomp.fuse_weight = dup(params.decomp.fuse_weight);
  c.decomp.fuse_bias = dup(params.decomp.fuse_bias);
  for (const AdaptiveGraphParams& g : params.gcn) {
    AdaptiveGraphParams gg;
    gg.node_embedding = dup(g.node_embedding);
    gg.node_factor = dup(g.node_factor);
    gg.weight_factor = dup(g.weight_factor);
    gg.bias_factor = dup(g.bias_factor);
    c.gcn.push_back(std::move(gg));
  }
  for (const TcnLayerParams& t : params.tcn) {
    TcnLayerParams tt;
    tt.reduction_weight = dup(t.reduction_weight);
    tt.reduction_bias = dup(t.reduction_bias);
    tt.kernel = dup(t.kernel);
    tt.conv_bias = dup(t.conv_bias);
    tt.residual_weight = dup(t.residual_weight);
    c.tcn.push_back(std::move(tt));
  }
  c.head_weight = dup(params.head_weight);
  c.head_bias = dup(params.head_bias);
  return c;
}

PreparedWindow prepare_window(const std::vector<double>& window, std::size_t input_len, std::size_t n_features,
                              const ModelConfig& config) {
  if (window.size() != input_len * n_features) {
    throw std::invalid_argument("prepare_window: window size does not match input_len x n_features");
  }
  PreparedWindow out;
  out.raw = window;
  if (config.use_decomposition) {
    Tensor w({input_len, n_features}, window);
    DecompositionResult parts = decompose_window(w, config.avg_window, config.top_k);
    out.trend = parts.trend.values();
    out.pure_period = parts.pure_period.values();
  }
  return out;
}

PreparedBatch assemble_batch(const std::vector<PreparedWindow>& windows,
                             const std::vector<std::vector<double>>& targets,
                             const std::vector<std::size_t>& indices, std::size_t input_len,
                             std::size_t n_features) {
  if (indices.empty()) throw std::invalid_argument("assemble_batch: empty index list");
  const std::size_t b = indices.size();
  const std::size_t rows = b * input_len;
  const bool decomposed = !windows[indices[0]].trend.empty();

  PreparedBatch batch;
  batch.batch = b;
  std::vector<double> raw, trend, pure;
  raw.reserve(rows * n_features);
  if (decomposed) {
    trend.reserve(rows * n_features);
    pure.reserve(rows * n_features);
  }
  const std::size_t horizon = targets[indices[0]].size();
  std::vector<double> y;
  y.reserve(b * horizon);
  for (std::size_t i : indices) {
    raw.insert(raw.end(), windows[i].raw.begin(), windows[i].raw.end());
    if (decomposed) {
      trend.insert(trend.end(), windows[i].trend.begin(), windows[i].trend.end());
      pure.insert(pure.end(), windows[i].pure_period.begin(), windows[i].pure_period.end());
    }
    y.insert(y.end(), targets[i].begin(), targets[i].end());
  }
  batch.raw = Tensor({rows, n_features}, std::move(raw));
  if (decomposed) {
    batch.trend = Tensor({rows, n_features}, std::move(trend));
    batch.pure_period = Tensor({rows, n_features}, std::move(pure));
  }
  batch.targets = Tensor({b, horizon}, std::move(y));
  return batch;
}

Tensor model_forward_prepared(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config) {
  const std::size_t b = batch.batch;
  const std::size_t t_len = config.input_len;
  const std::size_t n_features = batch.raw.cols();
  if (batch.raw.rows() != b * t_len) {
    throw std::invalid_argument("model_forward: batch rows do not match B x input_len");
  }

  Tensor features;
  if (config.use_decomposition) {
    DecompositionResult parts{batch.trend, Tensor(), batch.pure_period};
    features = decomposition_branches(parts, params.decomp, b);
  } else {
    features = batch.raw;
  }

  if (config.use_gcn) {
    const std::size_t c_in = config.use_decomposition ? config.node_channels : 1;
    Tensor nodes = reshape(features, {b * t_len * n_features, c_in});
    Tensor mixed = gcn_layer_stack(nodes, params.gcn);
    features = reshape(mixed, {b * t_len, n_features * config.node_channels});
  }

  if (config.use_tcn) {
    features = tcn_forward(features, config.tcn_config(), params.tcn, b);
  }

  std::vector<std::size_t> last_rows(b);
  for (std::size_t i = 0; i < b; ++i) last_rows[i] = i * t_len + (t_len - 1);
  Tensor final_step = gather_rows(features, last_rows);
  return add(matmul(final_step, params.head_weight), params.head_bias);
}

Tensor model_forward(const Tensor& batch, const ModelParams& params, const ModelConfig& config) {
  if (batch.rank() != 3) throw std::invalid_argument("model_forward: expects a [B x T x F] batch");
  const std::size_t b = batch.shape()[0];
  const std::size_t t_len = batch.shape()[1];
  const std::size_t n_features = batch.shape()[2];
  if (t_len != config.input_len) {
    throw std::invalid_argument("model_forward: batch time axis " + std::to_string(t_len) +
                                " does not match input_len " + std::to_string(config.input_len));
  }

  std::vector<PreparedWindow> windows(b);
  std::vector<std::vector<double>> dummy_targets(b, std::vector<double>{0.0});
  std::vector<std::size_t> indices(b);
  const std::size_t stride = t_len * n_features;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> w(batch.values().begin() + static_cast<std::ptrdiff_t>(i * stride),
                          batch.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    windows[i] = prepare_window(w, t_len, n_features, config);
    indices[i] = i;
  }
  PreparedBatch prepared = assemble_batch(windows, dummy_targets, indices, t_len, n_features);
  return model_forward_prepared(prepared, params, config);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mse_loss: prediction and target shapes differ");
  }
  Tensor diff = subtract(pred, target);
  return mean(multiply(diff, diff));
}

AdamState AdamState::for_params(const std::vector<Tensor>& params) {
  AdamState s;
  s.first_moment.reserve(params.size());
  s.second_moment.reserve(params.size());
  for (const Tensor& p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double learning_rate) {
  if (params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: state does not match parameter list");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& values = params[i].mutable_values();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const std::vector<double>* grad = params[i].has_grad() ? &params[i].grad() : nullptr;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad ? (*grad)[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      values[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void TrainingHistory::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("history: cannot write " + path);
  out << "epoch,train_loss,val_loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    out << (e + 1) << ',' << train_loss[e] << ',' << val_loss[e] << '\n';
  }
}

namespace {

double evaluate_loss(const std::vector<PreparedWindow>& windows, const std::vector<std::vector<double>>& targets,
                     const ModelParams& params, const ModelConfig& config, std::size_t n_features) {
  NoGradGuard guard;
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<std::size_t> indices;
  for (std::size_t begin = 0; begin < windows.size(); begin += config.batch_size) {
    const std::size_t end = std::min(windows.size(), begin + config.batch_size);
    indices.resize(end - begin);
    std::iota(indices.begin(), indices.end(), begin);
    PreparedBatch batch = assemble_batch(windows, targets, indices, config.input_len, n_features);
    Tensor loss = mse_loss(model_forward_prepared(batch, params, config), batch.targets);
    total += loss.item() * static_cast<double>(end - begin);
    counted += end - begin;
  }
  return total / static_cast<double>(counted);
}

std::vector<PreparedWindow> prepare_all(const WindowedDataset& ds, const ModelConfig& config) {
  std::vector<PreparedWindow> out;
  out.reserve(ds.count());
  for (const auto& w : ds.inputs) {
    out.push_back(prepare_window(w, ds.input_len, ds.feature_names.size(), config));
  }
  return out;
}

}  // namespace

TrainResult train(const WindowedDataset& train_split, const WindowedDataset& val_split, const ModelConfig& config) {
  config.validate();
  if (train_split.count() == 0) throw std::invalid_argument("train: empty training split");
  if (train_split.input_len != config.input_len) {
    throw std::invalid_argument("train: dataset input_len " + std::to_string(train_split.input_len) +
                                " does not match config input_len " + std::to_string(config.input_len));
  }
  if (train_split.horizon != config.horizon) {
    throw std::invalid_argument("train: dataset horizon " + std::to_string(train_split.horizon) +
                                " does not match config horizon " + std::to_string(config.horizon));
  }
  const std::size_t n_features = train_split.feature_names.size();

  std::mt19937_64 rng(config.seed);
  ModelParams params = init_model_params(config, n_features, rng);
  std::vector<Tensor> tensors = parameter_tensors(params);
  AdamState optimizer = AdamState::for_params(tensors);

  const std::vector<PreparedWindow> train_windows = prepare_all(train_split, config);
  const std::vector<PreparedWindow> val_windows = prepare_all(val_split, config);

  TrainingHistory history;
  ModelParams best = clone_params(params);
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_split.count());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                             order.begin() + static_cast<std::ptrdiff_t>(end));
      PreparedBatch batch =
          assemble_batch(train_windows, train_split.targets, indices, config.input_len, n_features);

      Tape::active().clear();
      for (Tensor& t : tensors) t.zero_grad();
      Tensor loss = mse_loss(model_forward_prepared(batch, params, config), batch.targets);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      Tape::active().backward(loss);
      adam_step(tensors, optimizer, config.learning_rate);
      for (const Tensor& t : tensors) {
        for (double v : t.values()) {
          if (!std::isfinite(v)) {
            throw std::runtime_error("train: non-finite parameter after epoch " + std::to_string(epoch));
          }
        }
      }
      epoch_loss += loss_value * static_cast<double>(end - begin);
    }
    Tape::active().clear();
    epoch_loss /= static_cast<double>(order.size());

    const double val_loss = val_split.count() == 0
                                ? epoch_loss
                                : evaluate_loss(val_windows, val_split.targets, params, config, n_features);
    history.train_loss.push_back(epoch_loss);
    history.val_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = clone_params(params);
      history.best_epoch = epoch;
    }
    if (config.stop_at_train_loss > 0.0 && epoch_loss < config.stop_at_train_loss) break;
  }
  return {std::move(best), std::move(history)};
}

std::vector<std::vector<double>> predict(const WindowedDataset& dataset, const ModelParams& params,
                                         const ModelConfig& config, std::size_t batch_size) {
  NoGradGuard guard;
  const std::size_t n_features = dataset.feature_names.size();
  std::vector<std::vector<double>> out;
  out.reserve(dataset.count());
  std::vector<std::size_t> indices;
  for (std::size_t begin = 0; begin < dataset.count(); begin += batch_size) {
    const std::size_t end = std::min(dataset.count(), begin + batch_size);
    indices.resize(end - begin);
    std::iota(indices.begin(), indices.end(), begin);
    std::vector<PreparedWindow> windows;
    windows.reserve(end - begin);
    std::vector<std::vector<double>> targets;
    targets.reserve(end - begin);
    std::vector<std::size_t> local(end - begin);
    std::iota(local.begin(), local.end(), 0);
    for (std::size_t i = begin; i < end; ++i) {
      windows.push_back(prepare_window(dataset.inputs[i], dataset.input_len, n_features, config));
      targets.push_back(dataset.targets[i]);
    }
    PreparedBatch batch = assemble_batch(windows, targets, local, config.input_len, n_features);
    Tensor pred = model_forward_prepared(batch, params, config);
    for (std::size_t i = 0; i < end - begin; ++i) {
      std::vector<double> row(pred.values().begin() + static_cast<std::ptrdiff_t>(i * config.horizon),
                              pred.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * config.horizon));
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace agtcnsd
