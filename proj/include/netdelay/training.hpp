#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdelay/model.hpp"
#include "netdelay/params.hpp"
#include "netdelay/trace.hpp"

namespace netdelay {

/// mean_i (ln predicted_i - ln actual_i)^2
double log_mse_loss(std::span<const double> predicted, std::span<const double> actual);

/// 100 * mean_i |predicted_i - actual_i| / actual_i
double mape(std::span<const double> predicted, std::span<const double> actual);

/// Transmission plus propagation delay only.
std::vector<double> baseline_no_queuing(const NetworkScenario& scenario);

struct Checkpoint {
  ModelConfig model;
  NormStats stats;
  ModelParams params;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  std::size_t best_epoch = 0;  // 1-based; 0 when never selected
  double best_validation_mape = 0.0;

  bool operator==(const Checkpoint&) const = default;
};

/// Layout: 8-byte magic, u64 header length, JSON header (config, stats,
/// metadata), then the binary parameter list.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 2.5e-4;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  double lr_decay = 1.0;        // per-epoch multiplier; 1 keeps the rate fixed
  /// Stop once an epoch's training MAPE falls below this value (0 disables).
  double stop_at_train_mape = 0.0;
  /// Where best.ckpt and metrics.jsonl go; empty keeps everything in memory.
  std::filesystem::path checkpoint_dir;
  /// Adds wall time to metrics.jsonl (which is otherwise reproducible byte for byte).
  bool log_wall_time = false;
  std::size_t jobs = 1;

  void validate() const;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_mape = 0.0;
  double validation_mape = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochReport> reports;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// One Adam step per scenario on log-MSE, scenarios visited in a seeded
/// shuffle each epoch. The checkpoint with the lowest validation MAPE is
/// kept (and written to checkpoint_dir when set).
TrainResult train(std::span<const NamedScenario> train_set,
                  std::span<const NamedScenario> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct ScenarioEvaluation {
  std::string name;
  std::size_t flows = 0;
  double mape = 0.0;
  double baseline_mape = 0.0;
  std::vector<double> predictions;
};

struct EvaluationReport {
  double mape = 0.0;           // pooled over every flow of every scenario
  double baseline_mape = 0.0;  // same pooling, no-queuing baseline
  std::size_t flows = 0;
  std::vector<ScenarioEvaluation> scenarios;
};

EvaluationReport evaluate(const Checkpoint& checkpoint, std::span<const NamedScenario> dataset,
                          std::size_t jobs = 1);

}  // namespace netdelay
