#pragma once

#include <span>
#include <vector>

#include "netdelay/tape.hpp"

namespace netdelay {

NodeId mlp_forward(Tape& tape, const MlpWeights& weights, NodeId x);
Vec mlp_forward(const MlpWeights& weights, const Vec& x);

Vec gru_cell(const GruWeights& weights, const Vec& x, const Vec& h);

struct SequenceOutput {
  std::vector<NodeId> ys;  // ys[i]: state after consuming xs[i]
  NodeId h_final = 0;
};

/// Runs the GRU cell left to right from h0.
SequenceOutput gru_sequence(Tape& tape, const GruWeights& weights, std::span<const NodeId> xs,
                            NodeId h0);

/// Two stacked GRU layers, both starting from a zero state; the output
/// sequence of the first layer is the input of the second and the final
/// state of the second layer is returned.
NodeId stacked_gru_encode(Tape& tape, const GruWeights& layer1, const GruWeights& layer2,
                          std::span<const NodeId> xs);
Vec stacked_gru_encode(const GruWeights& layer1, const GruWeights& layer2,
                       std::span<const Vec> xs);

}  // namespace netdelay
