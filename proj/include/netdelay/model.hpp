#pragma once

#include <functional>
#include <vector>

#include "netdelay/params.hpp"
#include "netdelay/scenario.hpp"
#include "netdelay/tape.hpp"
#include "netdelay/trace.hpp"

namespace netdelay {

/// Tape handles for every hidden state of one message-passing iteration.
struct EmbeddingState {
  std::vector<NodeId> h_f;                  // per flow
  std::vector<NodeId> h_lq;                 // per linkport
  std::vector<NodeId> h_d;                  // per device
  std::vector<std::vector<NodeId>> m_tilde; // per flow, per path position
  std::size_t iteration = 0;
};

/// Plain values of the partial flow states, per flow and path position.
using PartialFlowStates = std::vector<std::vector<Vec>>;

std::vector<NodeId> encode_flows(Tape& tape, const NetworkScenario& scenario,
                                 const ModelWeights& weights, const NormStats& stats);
std::vector<NodeId> encode_linkports(Tape& tape, const NetworkScenario& scenario,
                                     const ModelWeights& weights, const NormStats& stats);
std::vector<NodeId> encode_devices(Tape& tape, const NetworkScenario& scenario,
                                   const ModelWeights& weights, std::span<const NodeId> h_lq);

/// Iteration-0 state: encoder outputs and no partial flow states yet.
EmbeddingState initial_state(Tape& tape, const NetworkScenario& scenario,
                             const ModelWeights& weights, const NormStats& stats);

/// Flow RNN along each path, then link-port and device GRU updates.
EmbeddingState message_passing_iteration(Tape& tape, const NetworkScenario& scenario,
                                         const ModelWeights& weights,
                                         const EmbeddingState& previous);

PartialFlowStates partial_flow_values(const Tape& tape, const EmbeddingState& state);

/// True when at least `quantile` of the flows changed by less than
/// `threshold` in mean absolute relative terms.
bool has_converged(const PartialFlowStates& current, const PartialFlowStates& previous,
                   double threshold = 0.05, double quantile = 0.95);

/// Drives `step` (which performs one iteration and returns its partial flow
/// states) until convergence, checked from the second iteration on, or until
/// `t_max` iterations. Returns the number of iterations run.
std::size_t iterate_message_passing(const std::function<PartialFlowStates()>& step,
                                    std::size_t t_max, double threshold, double quantile);

/// Sum over hops of packet_size / bandwidth, in path order.
double transmission_delay(const NetworkScenario& scenario, std::size_t flow);
/// Sum over hops of the link propagation delay, in path order.
double propagation_delay(const NetworkScenario& scenario, std::size_t flow);

/// Per-flow delay: queuing (learned, non-negative) + transmission + propagation.
std::vector<NodeId> readout(Tape& tape, const NetworkScenario& scenario,
                            const ModelWeights& weights,
                            const std::vector<std::vector<NodeId>>& m_tilde,
                            double queue_delay_unit_s);

struct ForwardResult {
  std::vector<NodeId> predictions;  // scalar nodes, aligned with scenario.flows()
  std::size_t iterations = 0;
};

ForwardResult forward(Tape& tape, const NetworkScenario& scenario, const ModelWeights& weights,
                      const NormStats& stats, const ModelConfig& config);

struct Prediction {
  std::vector<double> delays_s;
  std::size_t iterations = 0;
};

Prediction predict(const NetworkScenario& scenario, const ModelParams& params,
                   const NormStats& stats, const ModelConfig& config);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> predictions;
  ModelParams gradients;
  std::size_t iterations = 0;
};

/// Log-MSE against the scenario's labels together with its exact gradient.
LossAndGradient loss_and_gradient(const NetworkScenario& scenario, const ModelParams& params,
                                  const NormStats& stats, const ModelConfig& config);

/// Forward-only log-MSE.
double loss_value(const NetworkScenario& scenario, const ModelParams& params,
                  const NormStats& stats, const ModelConfig& config);

}  // namespace netdelay
