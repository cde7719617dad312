#include "netdelay/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace netdelay {

double relative_error(double analytic, double numeric, double floor) {
  double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult check_model_gradients(const NetworkScenario& scenario, const ModelParams& params,
                                      const NormStats& stats, const ModelConfig& config,
                                      double step, double floor) {
  LossAndGradient exact = loss_and_gradient(scenario, params, stats, config);
  GradCheckResult result;
  ModelParams probe = params;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    auto& values = probe.tensors()[t].data;
    const auto& grads = exact.gradients.tensors()[t].data;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double saved = values[i];
      values[i] = saved + step;
      double up = loss_value(scenario, probe, stats, config);
      values[i] = saved - step;
      double down = loss_value(scenario, probe, stats, config);
      values[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double analytic = grads[i];
      ++result.checked;
      if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
        result.all_finite = false;
        continue;
      }
      double rel = relative_error(analytic, numeric, floor);
      result.max_absolute_error = std::max(result.max_absolute_error, std::abs(analytic - numeric));
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(rel, result.max_relative_error);
        result.worst_parameter = probe.names()[t];
        result.worst_index = i;
      }
    }
  }
  return result;
}

ModelConfig tiny_model_config() {
  ModelConfig config;
  config.flow_dim = 8;
  config.linkport_dim = 8;
  config.device_dim = 4;
  config.packet_dim = 8;
  config.t_max = 4;
  config.convergence_threshold = 0.0;
  return config;
}

namespace {

Flow random_flow(std::mt19937_64& rng, Id id, std::vector<Id> path) {
  Flow flow;
  flow.id = std::move(id);
  flow.path = std::move(path);
  flow.packet_size_bits = 8000.0;
  flow.distribution = Distribution::MB;
  flow.packet_bins.resize(kBinCount);
  std::uint64_t total = 0;
  for (auto& bin : flow.packet_bins) {
    // Mostly empty bins with occasional small bursts.
    std::uint64_t draw = rng() % 8;
    bin.packet_count = draw < 5 ? 0 : draw - 4;
    bin.bits = static_cast<double>(bin.packet_count) * flow.packet_size_bits;
    total += bin.packet_count;
  }
  if (total == 0) {
    flow.packet_bins[0].packet_count = 1;
    flow.packet_bins[0].bits = flow.packet_size_bits;
    total = 1;
  }
  flow.num_packets = total;
  flow.avg_load_bps = static_cast<double>(total) * flow.packet_size_bits;
  return flow;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

NetworkScenario tiny_gradcheck_scenario(std::uint64_t seed, const ModelParams& params,
                                        const ModelConfig& config) {
  std::mt19937_64 rng(seed);
  std::vector<Device> devices{
      {"a", DeviceKind::Router, {"a-b"}},
      {"b", DeviceKind::Switch, {"b-a", "b-c"}},
      {"c", DeviceKind::Router, {"c-b"}},
  };
  std::vector<LinkPort> linkports{
      {"a-b", "a", 1e7, 1e-5},
      {"b-a", "b", 2e7, 1e-5},
      {"b-c", "b", 1e7, 1e-5},
      {"c-b", "c", 4e7, 1e-5},
  };
  std::vector<Flow> flows;
  flows.push_back(random_flow(rng, "f0", {"a-b", "b-c"}));
  flows.push_back(random_flow(rng, "f1", {"b-c"}));
  NetworkScenario unlabelled = build_scenario(devices, linkports, flows);

  std::vector<NetworkScenario> fit{unlabelled};
  NormStats stats = fit_normalization(fit);
  Prediction p = predict(unlabelled, params, stats, config);
  std::vector<double> labels;
  for (double d : p.delays_s) labels.push_back(d * std::exp2(2.0 * unit_uniform(rng) - 1.0));
  return with_labels(unlabelled, labels);
}

GradCheckRun run_tiny_gradcheck(std::uint64_t seed) {
  auto start = std::chrono::steady_clock::now();
  ModelConfig config = tiny_model_config();
  ModelParams params = init_params(seed, config);
  NetworkScenario scenario = tiny_gradcheck_scenario(seed, params, config);
  std::vector<NetworkScenario> fit{scenario};
  NormStats stats = fit_normalization(fit);
  GradCheckRun run;
  run.result = check_model_gradients(scenario, params, stats, config);
  run.parameter_count = params.scalar_count();
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace netdelay
