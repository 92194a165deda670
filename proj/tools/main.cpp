#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agtcnsd/checkpoint.hpp"
#include "agtcnsd/decomposition.hpp"
#include "agtcnsd/experiment.hpp"
#include "agtcnsd/graph.hpp"
#include "agtcnsd/metrics.hpp"
#include "agtcnsd/model.hpp"
#include "agtcnsd/pipeline.hpp"
#include "agtcnsd/runconfig.hpp"
#include "agtcnsd/synthetic.hpp"
#include "agtcnsd/timeseries.hpp"

namespace {

using namespace agtcnsd;

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return RunConfig::load(path);
}

struct SeedOverride {
  std::optional<std::uint64_t> value;
  void apply(RunConfig& config) const {
    if (value) config.model.seed = *value;
  }
};

TimeSeriesFrame load_clean_frame(const std::string& path) {
  TimeSeriesFrame frame = load_csv(path);
  for (std::size_t c = 0; c < frame.width(); ++c) {
    for (std::size_t t = 0; t < frame.length(); ++t) {
      if (frame.flags[c][t] != CellFlag::valid) {
        throw std::runtime_error("'" + path + "' still has missing cells (column '" + frame.names[c] +
                                 "', row " + std::to_string(t + 2) + "); run `preprocess` first");
      }
    }
  }
  return frame;
}

NormalizationStats identity_stats(const std::vector<std::string>& names) {
  NormalizationStats stats;
  for (const auto& name : names) stats.ranges[name] = {0.0, 1.0};
  return stats;
}

int cmd_generate_synthetic(const std::string& out, std::size_t steps, std::size_t features, std::uint64_t seed,
                           double coupling, double noise) {
  TimeSeriesFrame frame = generate_synthetic(steps, features, seed, coupling, noise);
  write_csv(frame, out);
  std::cout << "wrote " << frame.length() << " steps x " << frame.width() << " features to " << out << "\n";
  return 0;
}

int cmd_preprocess(const std::string& in, const std::string& out, const std::string& config_path,
                   const std::string& stats_out, bool emit_flags) {
  const RunConfig config = load_config_or_default(config_path);
  TimeSeriesFrame frame = load_csv(in);
  frame = flag_outliers_pauta(frame);
  frame = interpolate_linear(frame);
  frame = downsample(frame, config.downsample_factor);

  const std::vector<std::string> selected =
      select_features(frame, config.target_column, config.pearson_threshold);
  frame = keep_columns(frame, selected);

  // Fit normalization on the chronological training region only, then
  // apply everywhere, so validation/test rows cannot leak into the stats.
  const std::size_t train_rows =
      std::max<std::size_t>(2, static_cast<std::size_t>(static_cast<double>(frame.length()) * config.split.train));
  TimeSeriesFrame head;
  head.timestamps.assign(frame.timestamps.begin(), frame.timestamps.begin() + static_cast<std::ptrdiff_t>(train_rows));
  head.time_points.assign(frame.time_points.begin(), frame.time_points.begin() + static_cast<std::ptrdiff_t>(train_rows));
  head.names = frame.names;
  for (std::size_t c = 0; c < frame.width(); ++c) {
    head.columns.push_back({frame.columns[c].begin(), frame.columns[c].begin() + static_cast<std::ptrdiff_t>(train_rows)});
    head.flags.push_back({frame.flags[c].begin(), frame.flags[c].begin() + static_cast<std::ptrdiff_t>(train_rows)});
  }
  const NormalizationStats stats = fit_minmax(head);
  frame = apply_minmax(frame, stats);

  write_csv(frame, out, emit_flags);
  const std::string stats_path = stats_out.empty() ? out + ".stats.json" : stats_out;
  stats.save(stats_path);
  std::cout << "kept features:";
  for (const auto& name : selected) std::cout << ' ' << name;
  std::cout << "\nwrote " << frame.length() << " rows to " << out << ", stats to " << stats_path << "\n";
  return 0;
}

int cmd_decompose(const std::string& in, const std::string& column, const std::string& out, std::size_t avg_window,
                  std::size_t top_k) {
  TimeSeriesFrame frame = load_clean_frame(in);
  const std::size_t c = frame.column_index(column);
  const std::size_t n = frame.length();
  Tensor series({n, 1}, frame.columns[c]);
  DecompositionResult parts = decompose_window(series, avg_window, top_k);

  std::ofstream os(out);
  if (!os) throw std::runtime_error("decompose: cannot write '" + out + "'");
  os << "t,original,trend,raw_period,pure_period\n";
  os.precision(17);
  for (std::size_t t = 0; t < n; ++t) {
    os << frame.timestamps[t] << ',' << frame.columns[c][t] << ',' << parts.trend.at(t) << ','
       << parts.raw_period.at(t) << ',' << parts.pure_period.at(t) << '\n';
  }
  std::cout << "wrote decomposition of '" << column << "' (" << n << " steps) to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& config_path, const std::string& checkpoint_path,
              const std::string& stats_path, const std::string& history_path, RunConfig config) {
  TimeSeriesFrame frame = load_clean_frame(data);
  WindowedDataset windows = make_windows(frame, config.target_column, config.model.input_len, config.model.horizon);
  auto splits = chronological_split(windows, config.split);

  TrainResult result = train(splits[0], splits[1], config.model);

  Checkpoint checkpoint;
  checkpoint.config = config.model;
  checkpoint.feature_names = frame.names;
  checkpoint.target_name = config.target_column;
  checkpoint.stats = stats_path.empty() ? identity_stats(frame.names) : NormalizationStats::load(stats_path);
  checkpoint.params = std::move(result.params);
  save_checkpoint(checkpoint, checkpoint_path);

  if (!history_path.empty()) result.history.write_csv(history_path);
  std::cout << "trained " << result.history.train_loss.size() << " epochs on " << splits[0].count()
            << " windows (val " << splits[1].count() << ", test " << splits[2].count() << ")\n"
            << "best validation loss " << result.history.val_loss[result.history.best_epoch - 1] << " at epoch "
            << result.history.best_epoch << "\ncheckpoint written to " << checkpoint_path << "\n";
  (void)config_path;
  return 0;
}

WindowedDataset windows_for_checkpoint(const Checkpoint& checkpoint, const TimeSeriesFrame& frame) {
  if (frame.names != checkpoint.feature_names) {
    std::string have;
    for (const auto& n : frame.names) have += n + " ";
    std::string want;
    for (const auto& n : checkpoint.feature_names) want += n + " ";
    throw std::runtime_error("data columns [" + have + "] do not match checkpoint features [" + want + "]");
  }
  return make_windows(frame, checkpoint.target_name, checkpoint.config.input_len, checkpoint.config.horizon);
}

int cmd_predict(const std::string& checkpoint_path, const std::string& data, const std::string& out) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  TimeSeriesFrame frame = load_clean_frame(data);
  WindowedDataset windows = windows_for_checkpoint(checkpoint, frame);
  const auto predictions = predict(windows, checkpoint.params, checkpoint.config);

  std::ofstream os(out);
  if (!os) throw std::runtime_error("predict: cannot write '" + out + "'");
  os << "step,t,y,yhat\n";
  os.precision(17);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t h = 0; h < checkpoint.config.horizon; ++h) {
      const std::size_t t = i + checkpoint.config.input_len + h;
      const double y = denormalize_value(windows.targets[i][h], checkpoint.stats, checkpoint.target_name);
      const double y_hat = denormalize_value(predictions[i][h], checkpoint.stats, checkpoint.target_name);
      os << (h + 1) << ',' << frame.timestamps[t] << ',' << y << ',' << y_hat << '\n';
    }
  }
  std::cout << "wrote " << predictions.size() << " windows x " << checkpoint.config.horizon << " steps to " << out
            << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data, const std::string& out,
                 bool raw_scale, const std::string& split_name, const RunConfig& config) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  TimeSeriesFrame frame = load_clean_frame(data);
  WindowedDataset windows = windows_for_checkpoint(checkpoint, frame);

  WindowedDataset subject = windows;
  if (split_name != "all") {
    auto splits = chronological_split(windows, config.split);
    if (split_name == "train") subject = splits[0];
    else if (split_name == "val") subject = splits[1];
    else if (split_name == "test") subject = splits[2];
    else throw std::runtime_error("evaluate: unknown split '" + split_name + "'");
  }

  const MetricTriple metrics = evaluate_model(subject, checkpoint.params, checkpoint.config, checkpoint.stats,
                                              checkpoint.target_name, raw_scale, config.mape_epsilon);

  nlohmann::ordered_json j;
  j["scale"] = raw_scale ? "raw" : "normalized";
  j["split"] = split_name;
  j["windows"] = subject.count();
  j["horizons"][std::to_string(checkpoint.config.horizon)] = {
      {"mae", metrics.mae}, {"rmse", metrics.rmse}, {"mape", metrics.mape}};
  std::ofstream os(out);
  if (!os) throw std::runtime_error("evaluate: cannot write '" + out + "'");
  os << j.dump(2) << '\n';
  std::cout << "horizon " << checkpoint.config.horizon << ": mae " << metrics.mae << ", rmse " << metrics.rmse
            << ", mape " << metrics.mape << " (" << (raw_scale ? "raw" : "normalized") << " scale)\n";
  return 0;
}

std::vector<ExperimentCell> load_external_baselines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("baselines: cannot read '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  std::vector<ExperimentCell> rows;
  for (const auto& item : j) {
    ExperimentCell cell;
    cell.variant = item.at("variant").get<std::string>();
    cell.horizon = item.at("horizon").get<std::size_t>();
    cell.median = {item.at("mae").get<double>(), item.at("rmse").get<double>(), item.at("mape").get<double>()};
    cell.ok = true;
    rows.push_back(std::move(cell));
  }
  return rows;
}

int cmd_ablate(const std::string& data, const std::string& stats_path, const std::string& out_base,
               const RunConfig& config, const std::vector<std::string>& variant_names,
               const std::vector<std::size_t>& horizons, const std::vector<std::uint64_t>& seeds, bool sweep,
               bool raw_scale, std::size_t workers, const std::string& baselines_path) {
  ExperimentDataset dataset;
  dataset.frame = load_clean_frame(data);
  dataset.stats = stats_path.empty() ? identity_stats(dataset.frame.names) : NormalizationStats::load(stats_path);
  dataset.target_column = config.target_column;
  dataset.id = data;

  ExperimentOptions options;
  options.split = config.split;
  options.raw_scale = raw_scale;
  options.mape_epsilon = config.mape_epsilon;
  options.workers = workers;

  ExperimentReport report;
  if (sweep) {
    report = horizon_sweep(dataset, config.model, horizons, seeds, options);
  } else {
    std::vector<AblationVariant> variants;
    for (const auto& name : variant_names) variants.push_back(variant_from_name(name));
    report = run_ablation(dataset, config.model, variants, horizons, seeds, options);
  }
  if (!baselines_path.empty()) report.external = load_external_baselines(baselines_path);

  report.write_json(out_base + ".json");
  report.write_csv(out_base + ".csv");
  for (const ExperimentCell& cell : report.cells) {
    std::cout << cell.variant << " h" << cell.horizon;
    if (cell.ok) {
      std::cout << ": mae " << cell.median.mae << ", rmse " << cell.median.rmse << ", mape " << cell.median.mape;
    } else {
      std::cout << ": failed";
    }
    std::cout << "\n";
  }
  std::cout << "report written to " << out_base << ".json and " << out_base << ".csv\n";
  return 0;
}

int cmd_inspect_graph(const std::string& checkpoint_path, const std::string& out) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  if (checkpoint.params.gcn.empty()) {
    throw std::runtime_error("inspect-graph: checkpoint has no graph module (was it trained with use_gcn?)");
  }
  std::ofstream os(out);
  if (!os) throw std::runtime_error("inspect-graph: cannot write '" + out + "'");
  os << "layer,from,to,weight\n";
  os.precision(17);
  NoGradGuard guard;
  for (std::size_t l = 0; l < checkpoint.params.gcn.size(); ++l) {
    const Tensor adjacency = adaptive_adjacency(checkpoint.params.gcn[l].node_embedding);
    const std::size_t n = adjacency.rows();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        os << l << ',' << checkpoint.feature_names[i] << ',' << checkpoint.feature_names[j] << ','
           << adjacency.at2(i, j) << '\n';
      }
    }
  }
  std::cout << "wrote " << checkpoint.params.gcn.size() << " adjacency matrices to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate water-quality forecasting: series decomposition + adaptive graph convolution + "
               "temporal convolution"};
  app.require_subcommand(1);

  // generate-synthetic
  auto* gen = app.add_subcommand("generate-synthetic", "Write a reproducible surrogate sensor CSV");
  std::string gen_out;
  std::size_t gen_steps = 2000, gen_features = 8;
  std::uint64_t gen_seed = 0;
  double gen_coupling = 0.8, gen_noise = 0.05;
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--steps", gen_steps, "number of 30-minute steps (>= 200)")->capture_default_str();
  gen->add_option("--features", gen_features, "number of series including the target (>= 2)")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--coupling", gen_coupling, "strength of lagged cross-feature coupling into the target")
      ->capture_default_str();
  gen->add_option("--noise", gen_noise, "Gaussian noise sigma")->capture_default_str();

  // preprocess
  auto* pre = app.add_subcommand("preprocess",
                                 "Clean (pauta + interpolation), downsample, select features, min-max normalize");
  std::string pre_in, pre_out, pre_config, pre_stats;
  bool pre_flags = false;
  pre->add_option("--in", pre_in, "raw CSV")->required();
  pre->add_option("--out", pre_out, "cleaned CSV")->required();
  pre->add_option("--config", pre_config, "run config JSON");
  pre->add_option("--stats-out", pre_stats, "normalization stats JSON (default <out>.stats.json)");
  pre->add_flag("--emit-flags", pre_flags, "add per-parameter flag columns to the output");

  // decompose
  auto* dec = app.add_subcommand("decompose", "Emit trend / period split of one column for plotting");
  std::string dec_in, dec_col, dec_out;
  std::size_t dec_avg = 12, dec_topk = 15;
  dec->add_option("--in", dec_in, "clean CSV")->required();
  dec->add_option("--column", dec_col, "column to decompose")->required();
  dec->add_option("--out", dec_out, "output CSV")->required();
  dec->add_option("--avg-window", dec_avg, "moving average window")->capture_default_str();
  dec->add_option("--topk", dec_topk, "retained frequency bins")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train on a preprocessed CSV and write a checkpoint");
  std::string tr_data, tr_config, tr_ckpt, tr_stats, tr_history;
  RunConfig tr_overrides;
  std::optional<std::uint64_t> tr_seed;
  std::optional<std::size_t> tr_horizon, tr_epochs, tr_input_len, tr_batch;
  std::optional<double> tr_lr, tr_stop;
  tr->add_option("--data", tr_data, "preprocessed CSV")->required();
  tr->add_option("--config", tr_config, "run config JSON");
  tr->add_option("--checkpoint", tr_ckpt, "output checkpoint path")->required();
  tr->add_option("--stats", tr_stats, "normalization stats JSON to embed (from preprocess)");
  tr->add_option("--history", tr_history, "write per-epoch losses CSV here");
  tr->add_option("--seed", tr_seed, "training seed (overrides config)");
  tr->add_option("--horizon", tr_horizon, "prediction steps (overrides config)");
  tr->add_option("--epochs", tr_epochs, "training epochs (overrides config)");
  tr->add_option("--input-len", tr_input_len, "input window length (overrides config)");
  tr->add_option("--batch-size", tr_batch, "mini-batch size (overrides config)");
  tr->add_option("--learning-rate", tr_lr, "Adam learning rate (overrides config)");
  tr->add_option("--stop-at-train-loss", tr_stop, "early stop threshold on train MSE (overrides config)");

  // predict
  auto* pr = app.add_subcommand("predict", "Emit per-window predictions (step,t,y,yhat) on the raw scale");
  std::string pr_ckpt, pr_data, pr_out;
  pr->add_option("--checkpoint", pr_ckpt, "trained checkpoint")->required();
  pr->add_option("--data", pr_data, "preprocessed CSV")->required();
  pr->add_option("--out", pr_out, "output CSV")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Report MAE/RMSE/MAPE for a checkpoint on a dataset");
  std::string ev_ckpt, ev_data, ev_out, ev_split = "test", ev_config;
  bool ev_raw = false, ev_norm = false;
  ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  ev->add_option("--data", ev_data, "preprocessed CSV")->required();
  ev->add_option("--out", ev_out, "output JSON")->required();
  ev->add_option("--split", ev_split, "train|val|test|all")->capture_default_str();
  ev->add_option("--config", ev_config, "run config JSON (split fractions, mape epsilon)");
  ev->add_flag("--raw-scale", ev_raw, "denormalize before computing metrics (default)");
  ev->add_flag("--normalized", ev_norm, "compute metrics on the normalized scale");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and compare module ablations or run the horizon sweep");
  std::string ab_data, ab_stats, ab_out, ab_config, ab_baselines;
  std::vector<std::string> ab_variants = {"model1", "model2", "model3", "model4", "model5", "model6"};
  std::vector<std::size_t> ab_horizons = {24};
  std::vector<std::uint64_t> ab_seeds = {0, 1, 2};
  bool ab_sweep = false, ab_norm = false;
  std::size_t ab_workers = 1;
  ab->add_option("--data", ab_data, "preprocessed CSV")->required();
  ab->add_option("--stats", ab_stats, "normalization stats JSON (enables raw-scale metrics)");
  ab->add_option("--out", ab_out, "output base path; writes <out>.json and <out>.csv")->required();
  ab->add_option("--config", ab_config, "run config JSON");
  ab->add_option("--variants", ab_variants, "ablation variants (model1..model6)")->capture_default_str();
  ab->add_option("--horizons", ab_horizons, "prediction horizons")->capture_default_str();
  ab->add_option("--seeds", ab_seeds, "training seeds; cells report the median")->capture_default_str();
  ab->add_option("--workers", ab_workers, "parallel training workers")->capture_default_str();
  ab->add_option("--baselines", ab_baselines, "JSON with external baseline rows to carry into the report");
  ab->add_flag("--sweep", ab_sweep, "run the AGTCNSD-vs-TCN horizon sweep instead of the variant list");
  ab->add_flag("--normalized", ab_norm, "report metrics on the normalized scale");

  // inspect-graph
  auto* ig = app.add_subcommand("inspect-graph", "Emit the learned adjacency matrices with node names");
  std::string ig_ckpt, ig_out;
  ig->add_option("--checkpoint", ig_ckpt, "trained checkpoint")->required();
  ig->add_option("--out", ig_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate_synthetic(gen_out, gen_steps, gen_features, gen_seed, gen_coupling, gen_noise);
    if (*pre) return cmd_preprocess(pre_in, pre_out, pre_config, pre_stats, pre_flags);
    if (*dec) return cmd_decompose(dec_in, dec_col, dec_out, dec_avg, dec_topk);
    if (*tr) {
      RunConfig config = load_config_or_default(tr_config);
      if (tr_seed) config.model.seed = *tr_seed;
      if (tr_horizon) config.model.horizon = *tr_horizon;
      if (tr_epochs) config.model.epochs = *tr_epochs;
      if (tr_input_len) config.model.input_len = *tr_input_len;
      if (tr_batch) config.model.batch_size = *tr_batch;
      if (tr_lr) config.model.learning_rate = *tr_lr;
      if (tr_stop) config.model.stop_at_train_loss = *tr_stop;
      config.model.validate();
      return cmd_train(tr_data, tr_config, tr_ckpt, tr_stats, tr_history, config);
    }
    if (*pr) return cmd_predict(pr_ckpt, pr_data, pr_out);
    if (*ev) {
      if (ev_raw && ev_norm) throw std::runtime_error("evaluate: pick one of --raw-scale / --normalized");
      return cmd_evaluate(ev_ckpt, ev_data, ev_out, !ev_norm, ev_split, load_config_or_default(ev_config));
    }
    if (*ab) {
      return cmd_ablate(ab_data, ab_stats, ab_out, load_config_or_default(ab_config), ab_variants, ab_horizons,
                        ab_seeds, ab_sweep, !ab_norm, ab_workers, ab_baselines);
    }
    if (*ig) return cmd_inspect_graph(ig_ckpt, ig_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
