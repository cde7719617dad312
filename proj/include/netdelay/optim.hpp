#pragma once

#include <cstdint>
#include <vector>

#include "netdelay/params.hpp"

namespace netdelay {

struct OptState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static OptState for_params(const ModelParams& params, double learning_rate);
};

/// One bias-corrected Adam update of every tensor, in layout order.
void adam_step(ModelParams& params, const ModelParams& grads, OptState& state);

/// Euclidean norm over every gradient entry.
double global_norm(const ModelParams& grads);

/// Rescales all gradients so their global norm is at most `max_norm`.
void clip_global_norm(ModelParams& grads, double max_norm);

}  // namespace netdelay
