#pragma once

#include <cstdint>
#include <string>

#include "netdelay/model.hpp"

namespace netdelay {

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool all_finite = true;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Compares the reverse-mode gradient of the log-MSE loss with central
/// differences of the forward pass, entry by entry, for every parameter.
GradCheckResult check_model_gradients(const NetworkScenario& scenario, const ModelParams& params,
                                      const NormStats& stats, const ModelConfig& config,
                                      double step = 1e-5, double floor = 1e-6);

/// Reduced widths (flow 8, link-port 8, device 4, packet encoder 8) with a
/// fixed iteration count, so the loss is smooth in the parameters.
ModelConfig tiny_model_config();

/// Random labelled scenario with three devices in a line and two flows.
/// Labels are the model's own predictions under `params`, perturbed by a
/// random factor in [0.5, 2].
NetworkScenario tiny_gradcheck_scenario(std::uint64_t seed, const ModelParams& params,
                                        const ModelConfig& config);

struct GradCheckRun {
  GradCheckResult result;
  std::size_t parameter_count = 0;
  double seconds = 0.0;
};

/// tiny_model_config + init_params(seed) + tiny_gradcheck_scenario(seed).
GradCheckRun run_tiny_gradcheck(std::uint64_t seed);

}  // namespace netdelay
