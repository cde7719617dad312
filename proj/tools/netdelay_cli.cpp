// netdelay: generate datasets, train, evaluate, predict and check gradients.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "netdelay/error.hpp"
#include "netdelay/gradcheck.hpp"
#include "netdelay/model.hpp"
#include "netdelay/synth.hpp"
#include "netdelay/trace.hpp"
#include "netdelay/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace netdelay;

namespace {

constexpr int kUsageError = 2;
constexpr int kDataError = 1;
constexpr double kGradTolerance = 1e-4;

struct Output {
  bool json_mode = false;

  void emit(const json& record, const std::string& text) const {
    if (json_mode)
      std::cout << record.dump() << '\n';
    else
      std::cout << text << '\n';
  }
};

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v << '%';
  return s.str();
}

std::string exact(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

/// A dataset directory with a manifest yields the requested split; a plain
/// directory of scenario files yields all of them in name order.
std::vector<NamedScenario> load_dataset(const fs::path& dir, Split split) {
  if (fs::exists(dir / kManifestName)) return load_split(dir, split);
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<NamedScenario> out;
  for (const auto& f : files) out.push_back({f.filename().string(), load_scenario(f)});
  if (out.empty()) throw Error(ErrorCode::EmptyDataset, "no scenario files in " + dir.string());
  return out;
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  throw Error(ErrorCode::InvalidConfig, "unknown split '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow delay prediction with a graph neural network"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  Output out;
  app.add_option("--seed", seed, "Random seed (all subcommands)");
  app.add_option("--jobs", jobs, "Scenario-level parallelism")->check(CLI::PositiveNumber);
  app.add_flag("--json", out.json_mode, "Line-delimited JSON output");

  auto* generate = app.add_subcommand("generate", "Simulate a labelled synthetic dataset");
  std::string gen_config, gen_out;
  generate->add_option("--config", gen_config, "Generator config file")->required();
  generate->add_option("--out", gen_out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the delay model");
  std::string train_data, train_out;
  std::size_t epochs = 100;
  double lr = 2.5e-4;
  double clip_norm = 0.0, lr_decay = 1.0, stop_mape = 0.0;
  std::size_t packet_dim = ModelConfig{}.packet_dim;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--out", train_out, "Run directory")->required();
  train_cmd->add_option("--epochs", epochs, "Maximum epochs");
  train_cmd->add_option("--lr", lr, "Adam learning rate");
  train_cmd->add_option("--clip-norm", clip_norm, "Global gradient-norm clip (0 = off)");
  train_cmd->add_option("--lr-decay", lr_decay, "Per-epoch learning-rate multiplier");
  train_cmd->add_option("--stop-at-mape", stop_mape, "Stop once training MAPE is below this (0 = off)");
  train_cmd->add_option("--packet-dim", packet_dim, "Packet encoder width");

  auto* eval_cmd = app.add_subcommand("evaluate", "MAPE of a checkpoint against labels");
  std::string eval_model, eval_data, eval_split = "test";
  eval_cmd->add_option("--model", eval_model, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_split, "Split when the directory has a manifest")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  auto* predict_cmd = app.add_subcommand("predict", "Per-flow delays for one scenario");
  std::string pred_model, pred_scenario;
  predict_cmd->add_option("--model", pred_model, "Checkpoint file")->required();
  predict_cmd->add_option("--scenario", pred_scenario, "Scenario file")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check on a tiny model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (generate->parsed()) {
      DatasetConfig config = load_dataset_config(gen_config);
      if (seed) config.seed = *seed;
      DatasetManifest manifest = gen_dataset(config, gen_out, jobs);
      out.emit({{"type", "generate"},
                {"out", gen_out},
                {"train", manifest.train.size()},
                {"validation", manifest.validation.size()},
                {"test", manifest.test.size()}},
               "wrote " + std::to_string(manifest.train.size()) + " train, " +
                   std::to_string(manifest.validation.size()) + " validation, " +
                   std::to_string(manifest.test.size()) + " test scenarios to " + gen_out);
    } else if (train_cmd->parsed()) {
      TrainConfig config;
      config.max_epochs = epochs;
      config.learning_rate = lr;
      config.seed = seed.value_or(0);
      config.grad_clip_norm = clip_norm;
      config.lr_decay = lr_decay;
      config.stop_at_train_mape = stop_mape;
      config.model.packet_dim = packet_dim;
      config.checkpoint_dir = train_out;
      config.jobs = jobs;
      config.validate();
      auto train_set = load_split(train_data, Split::Train);
      auto validation_set = load_split(train_data, Split::Validation);
      auto on_epoch = [&](const EpochReport& r) {
        std::ostringstream text;
        text << "epoch " << r.epoch << "  loss " << exact(r.train_loss) << "  train MAPE "
             << percent(r.train_mape) << "  validation MAPE " << percent(r.validation_mape);
        out.emit({{"type", "epoch"},
                  {"epoch", r.epoch},
                  {"train_loss", r.train_loss},
                  {"train_mape", r.train_mape},
                  {"validation_mape", r.validation_mape}},
                 text.str());
      };
      TrainResult result = train(train_set, validation_set, config, on_epoch);
      out.emit({{"type", "best"},
                {"epoch", result.best.best_epoch},
                {"validation_mape", result.best.best_validation_mape},
                {"checkpoint", (fs::path(train_out) / "best.ckpt").string()}},
               "best epoch " + std::to_string(result.best.best_epoch) + "  validation MAPE " +
                   percent(result.best.best_validation_mape) + "  -> " +
                   (fs::path(train_out) / "best.ckpt").string());
    } else if (eval_cmd->parsed()) {
      Checkpoint checkpoint = load_checkpoint(eval_model);
      auto dataset = load_dataset(eval_data, parse_split(eval_split));
      EvaluationReport report = evaluate(checkpoint, dataset, jobs);
      for (const auto& s : report.scenarios)
        out.emit({{"type", "scenario"},
                  {"name", s.name},
                  {"flows", s.flows},
                  {"mape", s.mape},
                  {"baseline_mape", s.baseline_mape}},
                 s.name + "  flows " + std::to_string(s.flows) + "  MAPE " + percent(s.mape) +
                     "  baseline " + percent(s.baseline_mape));
      out.emit({{"type", "summary"},
                {"scenarios", report.scenarios.size()},
                {"flows", report.flows},
                {"mape", report.mape},
                {"baseline_mape", report.baseline_mape}},
               "MAPE " + percent(report.mape) + "  no-queuing baseline MAPE " +
                   percent(report.baseline_mape) + "  (" + std::to_string(report.flows) +
                   " flows)");
    } else if (predict_cmd->parsed()) {
      Checkpoint checkpoint = load_checkpoint(pred_model);
      NetworkScenario scenario = load_scenario(pred_scenario);
      Prediction p = predict(scenario, checkpoint.params, checkpoint.stats, checkpoint.model);
      for (std::size_t f = 0; f < p.delays_s.size(); ++f) {
        const auto& id = scenario.flows()[f].id;
        out.emit({{"type", "flow"}, {"flow", id}, {"delay_s", p.delays_s[f]}},
                 id + "  " + exact(p.delays_s[f]) + " s");
      }
      out.emit({{"type", "iterations"}, {"iterations", p.iterations}},
               "message-passing iterations " + std::to_string(p.iterations));
    } else if (grad_cmd->parsed()) {
      GradCheckRun run = run_tiny_gradcheck(seed.value_or(0));
      const auto& r = run.result;
      bool ok = r.all_finite && r.max_relative_error < kGradTolerance;
      std::ostringstream text;
      text << "max relative error " << std::scientific << std::setprecision(3)
           << r.max_relative_error << " over " << r.checked << " parameters (worst "
           << r.worst_parameter << "[" << r.worst_index << "])  " << (ok ? "ok" : "FAILED");
      out.emit({{"type", "gradcheck"},
                {"max_relative_error", r.max_relative_error},
                {"max_absolute_error", r.max_absolute_error},
                {"checked", r.checked},
                {"worst_parameter", r.worst_parameter},
                {"worst_index", r.worst_index},
                {"ok", ok}},
               text.str());
      return ok ? 0 : kDataError;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
