#include "netdelay/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netdelay/error.hpp"
#include "netdelay/optim.hpp"
#include "parallel.hpp"

namespace netdelay {

using nlohmann::json;

namespace {

void check_pairing(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                              std::to_string(actual.size()) + " labels");
  }
  if (actual.empty()) throw Error(ErrorCode::EmptyDataset, "no flows to score");
  for (double y : actual) {
    if (!(y > 0.0)) throw Error(ErrorCode::NonPositiveLabel, "label " + std::to_string(y));
  }
}

struct PooledError {
  double sum = 0.0;
  std::size_t count = 0;

  void add(std::span<const double> predicted, std::span<const double> actual) {
    for (std::size_t i = 0; i < actual.size(); ++i) {
      sum += std::abs(predicted[i] - actual[i]) / actual[i];
    }
    count += actual.size();
  }
  double percent() const { return count == 0 ? 0.0 : 100.0 * sum / static_cast<double>(count); }
};

EvaluationReport evaluate_params(const ModelParams& params, const NormStats& stats,
                                 const ModelConfig& model, std::span<const NamedScenario> dataset,
                                 std::size_t jobs) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  for (const NamedScenario& s : dataset) {
    if (!s.scenario.has_labels()) {
      throw Error(ErrorCode::MissingLabels, "scenario '" + s.name + "' has no labels");
    }
  }
  EvaluationReport report;
  report.scenarios.resize(dataset.size());
  detail::parallel_for(dataset.size(), jobs, [&](std::size_t i) {
    const NetworkScenario& s = dataset[i].scenario;
    ScenarioEvaluation& e = report.scenarios[i];
    e.name = dataset[i].name;
    e.flows = s.flows().size();
    e.predictions = predict(s, params, stats, model).delays_s;
    e.mape = mape(e.predictions, *s.labels());
    e.baseline_mape = mape(baseline_no_queuing(s), *s.labels());
  });
  PooledError model_err, baseline_err;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const NetworkScenario& s = dataset[i].scenario;
    model_err.add(report.scenarios[i].predictions, *s.labels());
    baseline_err.add(baseline_no_queuing(s), *s.labels());
  }
  report.mape = model_err.percent();
  report.baseline_mape = baseline_err.percent();
  report.flows = model_err.count;
  return report;
}

json config_to_json(const ModelConfig& c) {
  return {{"flow_dim", c.flow_dim},
          {"linkport_dim", c.linkport_dim},
          {"device_dim", c.device_dim},
          {"packet_dim", c.packet_dim},
          {"mlp_hidden_layers", c.mlp_hidden_layers},
          {"t_max", c.t_max},
          {"convergence_threshold", c.convergence_threshold},
          {"convergence_quantile", c.convergence_quantile},
          {"queue_delay_unit_s", c.queue_delay_unit_s}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.flow_dim = j.at("flow_dim").get<std::size_t>();
  c.linkport_dim = j.at("linkport_dim").get<std::size_t>();
  c.device_dim = j.at("device_dim").get<std::size_t>();
  c.packet_dim = j.at("packet_dim").get<std::size_t>();
  c.mlp_hidden_layers = j.at("mlp_hidden_layers").get<std::size_t>();
  c.t_max = j.at("t_max").get<std::size_t>();
  c.convergence_threshold = j.at("convergence_threshold").get<double>();
  c.convergence_quantile = j.at("convergence_quantile").get<double>();
  c.queue_delay_unit_s = j.at("queue_delay_unit_s").get<double>();
  c.validate();
  return c;
}

json stats_to_json(const NormStats& stats) {
  json j = json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto f = static_cast<Feature>(i);
    j[std::string(feature_name(f))] = {{"min", stats[f].min}, {"max", stats[f].max}};
  }
  return j;
}

NormStats stats_from_json(const json& j) {
  NormStats stats;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Feature f = feature_from_name(it.key());
    stats[f].min = it->at("min").get<double>();
    stats[f].max = it->at("max").get<double>();
    if (stats[f].min > stats[f].max) {
      throw Error(ErrorCode::ParseError, "normalization range for '" + it.key() + "' has min > max");
    }
  }
  return stats;
}

constexpr char kCheckpointMagic[8] = {'N', 'D', 'C', 'K', 'P', 'T', '0', '1'};

json report_to_json(const EpochReport& r, bool with_wall_time) {
  json j = {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"train_mape", r.train_mape},
            {"validation_mape", r.validation_mape}};
  if (with_wall_time) j["wall_time_s"] = r.wall_time_s;
  return j;
}

}  // namespace

double log_mse_loss(std::span<const double> predicted, std::span<const double> actual) {
  check_pairing(predicted, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!(predicted[i] > 0.0)) {
      throw Error(ErrorCode::NumericalError, "prediction " + std::to_string(predicted[i]));
    }
    const double d = std::log(predicted[i] / actual[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(actual.size());
}

double mape(std::span<const double> predicted, std::span<const double> actual) {
  check_pairing(predicted, actual);
  PooledError e;
  e.add(predicted, actual);
  return e.percent();
}

std::vector<double> baseline_no_queuing(const NetworkScenario& scenario) {
  std::vector<double> out;
  out.reserve(scenario.flows().size());
  for (std::size_t f = 0; f < scenario.flows().size(); ++f) {
    out.push_back(transmission_delay(scenario, f) + propagation_delay(scenario, f));
  }
  return out;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const json header = {{"format", "netdelay-checkpoint/1"},
                       {"model", config_to_json(c.model)},
                       {"normalization", stats_to_json(c.stats)},
                       {"seed", c.seed},
                       {"learning_rate", c.learning_rate},
                       {"best_epoch", c.best_epoch},
                       {"best_validation_mape", c.best_validation_mape}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_params(out, c.params);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  char magic[sizeof kCheckpointMagic] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::ParseError, "'" + path.string() + "' is not a checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1u << 24)) throw Error(ErrorCode::ParseError, "bad checkpoint header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(ErrorCode::ParseError, "truncated checkpoint header");
  Checkpoint c;
  try {
    const json header = json::parse(text);
    if (header.at("format") != "netdelay-checkpoint/1") {
      throw Error(ErrorCode::ParseError, "unsupported checkpoint format");
    }
    c.model = config_from_json(header.at("model"));
    c.stats = stats_from_json(header.at("normalization"));
    c.seed = header.at("seed").get<std::uint64_t>();
    c.learning_rate = header.at("learning_rate").get<double>();
    c.best_epoch = header.at("best_epoch").get<std::size_t>();
    c.best_validation_mape = header.at("best_validation_mape").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "checkpoint header: " + std::string(e.what()));
  }
  c.params = read_params(in);
  if (c.params.names() != ModelParams::zeros(c.model).names()) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint parameters do not match its model config");
  }
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    if (c.params.tensors()[i].shape != ModelParams::zeros(c.model).tensors()[i].shape) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor '" + c.params.names()[i] +
                                                "' has the wrong shape");
    }
  }
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  if (max_epochs < 1) throw Error(ErrorCode::InvalidConfig, "max_epochs must be at least 1");
  if (grad_clip_norm < 0.0) throw Error(ErrorCode::InvalidConfig, "grad_clip_norm must be >= 0");
  if (!(lr_decay > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr_decay must be positive");
}

TrainResult train(std::span<const NamedScenario> train_set,
                  std::span<const NamedScenario> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "training split is empty");
  if (validation_set.empty()) throw Error(ErrorCode::EmptyDataset, "validation split is empty");
  for (const NamedScenario& s : train_set) {
    if (!s.scenario.has_labels()) {
      throw Error(ErrorCode::MissingLabels, "training scenario '" + s.name + "' has no labels");
    }
  }

  const std::vector<NetworkScenario> train_scenarios = scenarios_of(train_set);
  TrainResult result;
  Checkpoint& best = result.best;
  best.model = config.model;
  best.stats = fit_normalization(train_scenarios);
  best.seed = config.seed;
  best.learning_rate = config.learning_rate;

  ModelParams params = init_params(config.seed, config.model);
  best.params = params;
  OptState opt = OptState::for_params(params, config.learning_rate);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::ofstream metrics;
  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
    metrics.open(config.checkpoint_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw Error(ErrorCode::IoError, "cannot write metrics log");
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    // Fisher-Yates with explicit draws, so the order is the same on every
    // standard library.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng() % i]);
    }

    double loss_sum = 0.0;
    PooledError train_err;
    for (std::size_t idx : order) {
      const NamedScenario& item = train_set[idx];
      LossAndGradient lg = loss_and_gradient(item.scenario, params, best.stats, config.model);
      if (!std::isfinite(lg.loss) || !std::isfinite(global_norm(lg.gradients))) {
        throw Error(ErrorCode::NumericalError,
                    "non-finite loss or gradient on scenario '" + item.name + "'");
      }
      if (config.grad_clip_norm > 0.0) clip_global_norm(lg.gradients, config.grad_clip_norm);
      adam_step(params, lg.gradients, opt);
      loss_sum += lg.loss;
      train_err.add(lg.predictions, *item.scenario.labels());
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / static_cast<double>(train_set.size());
    report.train_mape = train_err.percent();
    report.validation_mape =
        evaluate_params(params, best.stats, config.model, validation_set, config.jobs).mape;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!have_best || report.validation_mape < best.best_validation_mape) {
      have_best = true;
      best.params = params;
      best.best_epoch = epoch;
      best.best_validation_mape = report.validation_mape;
      if (!config.checkpoint_dir.empty()) {
        save_checkpoint(best, config.checkpoint_dir / "best.ckpt");
      }
    }
    if (metrics.is_open()) {
      metrics << report_to_json(report, config.log_wall_time).dump() << '\n';
      metrics.flush();
    }
    result.reports.push_back(report);
    if (on_epoch) on_epoch(report);
    opt.learning_rate *= config.lr_decay;
    if (config.stop_at_train_mape > 0.0 && report.train_mape < config.stop_at_train_mape) break;
  }
  return result;
}

EvaluationReport evaluate(const Checkpoint& checkpoint, std::span<const NamedScenario> dataset,
                          std::size_t jobs) {
  return evaluate_params(checkpoint.params, checkpoint.stats, checkpoint.model, dataset, jobs);
}

}  // namespace netdelay
