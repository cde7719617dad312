#include "netdelay/kernels.hpp"

#include "netdelay/error.hpp"

namespace netdelay {

NodeId mlp_forward(Tape& tape, const MlpWeights& weights, NodeId x) {
  if (weights.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "mlp has no layers");
  NodeId y = x;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    y = tape.linear(weights.layers[i], y);
    if (i + 1 < weights.layers.size()) y = tape.silu(y);
  }
  return y;
}

Vec mlp_forward(const MlpWeights& weights, const Vec& x) {
  Tape tape(false);
  return tape.value(mlp_forward(tape, weights, tape.constant(x)));
}

Vec gru_cell(const GruWeights& weights, const Vec& x, const Vec& h) {
  Tape tape(false);
  return tape.value(tape.gru_cell(weights, tape.constant(x), tape.constant(h)));
}

SequenceOutput gru_sequence(Tape& tape, const GruWeights& weights, std::span<const NodeId> xs,
                            NodeId h0) {
  if (xs.empty()) throw Error(ErrorCode::EmptySequence, "gru_sequence needs at least one input");
  SequenceOutput out;
  out.ys.reserve(xs.size());
  NodeId h = h0;
  for (NodeId x : xs) {
    h = tape.gru_cell(weights, x, h);
    out.ys.push_back(h);
  }
  out.h_final = h;
  return out;
}

NodeId stacked_gru_encode(Tape& tape, const GruWeights& layer1, const GruWeights& layer2,
                          std::span<const NodeId> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptySequence, "packet sequence is empty");
  const auto h1 = tape.zeros(static_cast<Eigen::Index>(layer1.hidden()));
  const auto first = gru_sequence(tape, layer1, xs, h1);
  const auto h2 = tape.zeros(static_cast<Eigen::Index>(layer2.hidden()));
  return gru_sequence(tape, layer2, first.ys, h2).h_final;
}

Vec stacked_gru_encode(const GruWeights& layer1, const GruWeights& layer2,
                       std::span<const Vec> xs) {
  Tape tape(false);
  std::vector<NodeId> ids;
  ids.reserve(xs.size());
  for (const Vec& x : xs) ids.push_back(tape.constant(x));
  return tape.value(stacked_gru_encode(tape, layer1, layer2, ids));
}

}  // namespace netdelay
