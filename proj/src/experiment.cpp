#include "agtcnsd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace agtcnsd {

std::string variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::model1: return "model1";
    case AblationVariant::model2: return "model2";
    case AblationVariant::model3: return "model3";
    case AblationVariant::model4: return "model4";
    case AblationVariant::model5: return "model5";
    case AblationVariant::model6: return "model6";
  }
  throw std::invalid_argument("variant_name: unknown variant");
}

AblationVariant variant_from_name(const std::string& name) {
  for (int i = 0; i < 6; ++i) {
    const auto v = static_cast<AblationVariant>(i);
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown ablation variant '" + name + "' (expected model1..model6)");
}

ModelConfig variant_config(const ModelConfig& base, AblationVariant v) {
  ModelConfig c = base;
  switch (v) {
    case AblationVariant::model1:
      c.use_decomposition = false;
      c.use_gcn = false;
      c.use_tcn = true;
      c.use_reduction = false;
      break;
    case AblationVariant::model2:
      c.use_decomposition = false;
      c.use_gcn = false;
      c.use_tcn = true;
      c.use_reduction = true;
      break;
    case AblationVariant::model3:
      c.use_decomposition = false;
      c.use_gcn = true;
      c.use_tcn = true;
      c.use_reduction = true;
      break;
    case AblationVariant::model4:
      c.use_decomposition = true;
      c.use_gcn = true;
      c.use_tcn = false;
      c.use_reduction = true;
      break;
    case AblationVariant::model5:
      c.use_decomposition = true;
      c.use_gcn = false;
      c.use_tcn = true;
      c.use_reduction = true;
      break;
    case AblationVariant::model6:
      c.use_decomposition = true;
      c.use_gcn = true;
      c.use_tcn = true;
      c.use_reduction = true;
      break;
  }
  return c;
}

MetricTriple evaluate_model(const WindowedDataset& test_split, const ModelParams& params, const ModelConfig& config,
                            const NormalizationStats& stats, const std::string& target_column, bool raw_scale,
                            double mape_epsilon) {
  const auto predictions = predict(test_split, params, config);
  std::vector<double> y, y_hat;
  y.reserve(test_split.count() * config.horizon);
  y_hat.reserve(test_split.count() * config.horizon);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t h = 0; h < config.horizon; ++h) {
      double truth = test_split.targets[i][h];
      double guess = predictions[i][h];
      if (raw_scale) {
        truth = denormalize_value(truth, stats, target_column);
        guess = denormalize_value(guess, stats, target_column);
      }
      y.push_back(truth);
      y_hat.push_back(guess);
    }
  }
  return compute_metrics(y, y_hat, mape_epsilon);
}

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct Task {
  std::size_t cell_index;
  std::size_t seed_slot;
  std::string row_label;
  AblationVariant variant;
  std::size_t horizon;
  std::uint64_t seed;
};

ExperimentReport run_grid(const ExperimentDataset& dataset, const ModelConfig& base,
                          const std::vector<std::pair<std::string, AblationVariant>>& rows,
                          const std::vector<std::size_t>& horizons, const std::vector<std::uint64_t>& seeds,
                          const ExperimentOptions& options) {
  if (rows.empty() || horizons.empty() || seeds.empty()) {
    throw std::invalid_argument("experiment: variants, horizons and seeds must be non-empty");
  }

  ExperimentReport report;
  report.dataset_id = dataset.id;
  report.config_hash = fnv1a_hex(base.to_json());
  report.scale = options.raw_scale ? "raw" : "normalized";
  report.seeds = seeds;

  std::vector<Task> tasks;
  for (const auto& [label, variant] : rows) {
    for (std::size_t horizon : horizons) {
      ExperimentCell cell;
      cell.variant = label;
      cell.horizon = horizon;
      cell.seeds = seeds;
      cell.per_seed.resize(seeds.size());
      cell.errors.resize(seeds.size());
      const std::size_t cell_index = report.cells.size();
      report.cells.push_back(std::move(cell));
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        tasks.push_back({cell_index, s, label, variant, horizon, seeds[s]});
      }
    }
  }

  auto run_task = [&](const Task& task) {
    ExperimentCell& cell = report.cells[task.cell_index];
    try {
      ModelConfig config = variant_config(base, task.variant);
      config.horizon = task.horizon;
      config.seed = task.seed;
      config.validate();
      WindowedDataset windows =
          make_windows(dataset.frame, dataset.target_column, config.input_len, config.horizon);
      auto splits = chronological_split(windows, options.split);
      TrainResult result = train(splits[0], splits[1], config);
      cell.per_seed[task.seed_slot] =
          evaluate_model(splits[2], result.params, config, dataset.stats, dataset.target_column, options.raw_scale,
                         options.mape_epsilon);
    } catch (const std::exception& err) {
      cell.errors[task.seed_slot] = err.what();
    }
  };

  if (options.workers <= 1) {
    for (const Task& task : tasks) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t n_workers = std::min(options.workers, tasks.size());
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) run_task(tasks[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (ExperimentCell& cell : report.cells) {
    std::vector<double> mae, rmse, mape;
    for (const auto& metrics : cell.per_seed) {
      if (metrics) {
        mae.push_back(metrics->mae);
        rmse.push_back(metrics->rmse);
        mape.push_back(metrics->mape);
      }
    }
    cell.ok = !mae.empty();
    if (cell.ok) cell.median = {median_of(mae), median_of(rmse), median_of(mape)};
  }
  return report;
}

nlohmann::ordered_json cell_json(const ExperimentCell& cell) {
  nlohmann::ordered_json c;
  c["variant"] = cell.variant;
  c["horizon"] = cell.horizon;
  c["seed_aggregate"] = "median";
  c["ok"] = cell.ok;
  c["mae"] = cell.median.mae;
  c["rmse"] = cell.median.rmse;
  c["mape"] = cell.median.mape;
  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < cell.per_seed.size(); ++s) {
    nlohmann::ordered_json one;
    one["seed"] = cell.seeds[s];
    if (cell.per_seed[s]) {
      one["mae"] = cell.per_seed[s]->mae;
      one["rmse"] = cell.per_seed[s]->rmse;
      one["mape"] = cell.per_seed[s]->mape;
    } else {
      one["error"] = cell.errors[s];
    }
    per_seed.push_back(std::move(one));
  }
  c["per_seed"] = std::move(per_seed);
  return c;
}

}  // namespace

ExperimentReport run_ablation(const ExperimentDataset& dataset, const ModelConfig& base,
                              const std::vector<AblationVariant>& variants, const std::vector<std::size_t>& horizons,
                              const std::vector<std::uint64_t>& seeds, const ExperimentOptions& options) {
  std::vector<std::pair<std::string, AblationVariant>> rows;
  rows.reserve(variants.size());
  for (const AblationVariant v : variants) rows.emplace_back(variant_name(v), v);
  return run_grid(dataset, base, rows, horizons, seeds, options);
}

ExperimentReport horizon_sweep(const ExperimentDataset& dataset, const ModelConfig& base,
                               const std::vector<std::size_t>& horizons, const std::vector<std::uint64_t>& seeds,
                               const ExperimentOptions& options) {
  const std::vector<std::pair<std::string, AblationVariant>> rows = {
      {"AGTCNSD", AblationVariant::model6},
      {"TCN", AblationVariant::model1},
  };
  return run_grid(dataset, base, rows, horizons, seeds, options);
}

const ExperimentCell& ExperimentReport::cell(const std::string& variant, std::size_t horizon) const {
  for (const ExperimentCell& c : cells) {
    if (c.variant == variant && c.horizon == horizon) return c;
  }
  throw std::invalid_argument("report: no cell for " + variant + " at horizon " + std::to_string(horizon));
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["meta"] = {{"dataset", dataset_id}, {"config_hash", config_hash}, {"scale", scale}, {"seeds", seeds}};
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ExperimentCell& c : cells) arr.push_back(cell_json(c));
  j["cells"] = std::move(arr);
  if (!external.empty()) {
    nlohmann::ordered_json ext = nlohmann::ordered_json::array();
    for (const ExperimentCell& c : external) ext.push_back(cell_json(c));
    j["external"] = std::move(ext);
  }
  return j.dump(2);
}

void ExperimentReport::write_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << to_json() << '\n';
}

void ExperimentReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);

  std::vector<std::size_t> horizons;
  std::vector<std::string> models;
  for (const ExperimentCell& c : cells) {
    if (std::find(horizons.begin(), horizons.end(), c.horizon) == horizons.end()) horizons.push_back(c.horizon);
    if (std::find(models.begin(), models.end(), c.variant) == models.end()) models.push_back(c.variant);
  }
  out << "model";
  for (std::size_t h : horizons) out << ",mae_h" << h << ",rmse_h" << h << ",mape_h" << h;
  out << '\n';
  out.precision(10);
  auto emit_rows = [&](const std::vector<ExperimentCell>& pool, const std::vector<std::string>& row_names) {
    for (const std::string& model : row_names) {
      out << model;
      for (std::size_t h : horizons) {
        const ExperimentCell* found = nullptr;
        for (const ExperimentCell& c : pool) {
          if (c.variant == model && c.horizon == h) found = &c;
        }
        if (found && found->ok) {
          out << ',' << found->median.mae << ',' << found->median.rmse << ',' << found->median.mape;
        } else {
          out << ",,,";
        }
      }
      out << '\n';
    }
  };
  emit_rows(cells, models);
  std::vector<std::string> external_models;
  for (const ExperimentCell& c : external) {
    if (std::find(external_models.begin(), external_models.end(), c.variant) == external_models.end()) {
      external_models.push_back(c.variant);
    }
  }
  emit_rows(external, external_models);
}

}  // namespace agtcnsd
