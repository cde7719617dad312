#include "netdelay/optim.hpp"

#include <cmath>

#include "netdelay/error.hpp"

namespace netdelay {

OptState OptState::for_params(const ModelParams& params, double learning_rate) {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  OptState s;
  s.learning_rate = learning_rate;
  for (const Tensor& t : params.tensors()) {
    s.first_moment.emplace_back(t.shape);
    s.second_moment.emplace_back(t.shape);
  }
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, OptState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step: tensor counts differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& shape = params.tensors()[i].shape;
    if (grads.tensors()[i].shape != shape || state.first_moment[i].shape != shape ||
        state.second_moment[i].shape != shape) {
      throw Error(ErrorCode::ShapeMismatch, "adam_step: shape mismatch for '" + params.names()[i] + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = params.tensors()[i].vector();
    const auto g = grads.tensors()[i].vector();
    auto m = state.first_moment[i].vector();
    auto v = state.second_moment[i].vector();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
    w.array() -= state.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + state.epsilon);
  }
}

double global_norm(const ModelParams& grads) {
  double sq = 0.0;
  for (const Tensor& t : grads.tensors()) sq += t.vector().squaredNorm();
  return std::sqrt(sq);
}

void clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (Tensor& t : grads.tensors()) t.vector() *= factor;
  }
}

}  // namespace netdelay
