#include "netdelay/model.hpp"

#include <cmath>

#include "netdelay/error.hpp"
#include "netdelay/kernels.hpp"

namespace netdelay {

namespace {

Eigen::Index width(const GruWeights& w) { return static_cast<Eigen::Index>(w.hidden()); }

const std::vector<double>& require_labels(const NetworkScenario& scenario) {
  if (!scenario.labels()) throw Error(ErrorCode::MissingLabels, "scenario has no labels");
  return *scenario.labels();
}

}  // namespace

std::vector<NodeId> encode_flows(Tape& tape, const NetworkScenario& scenario,
                                 const ModelWeights& weights, const NormStats& stats) {
  std::vector<NodeId> out;
  out.reserve(scenario.flows().size());
  std::vector<NodeId> bins(kBinCount);
  for (const Flow& flow : scenario.flows()) {
    for (std::size_t k = 0; k < flow.packet_bins.size(); ++k) {
      const PacketBin& bin = flow.packet_bins[k];
      Vec x(kBinFeatures);
      x << apply_normalization(static_cast<double>(bin.packet_count), Feature::BinCount, stats),
          apply_normalization(bin.bits, Feature::BinBits, stats);
      bins[k] = tape.constant(std::move(x));
    }
    const NodeId h_pkts = stacked_gru_encode(tape, weights.packet_layer1, weights.packet_layer2,
                                             std::span(bins.data(), flow.packet_bins.size()));
    Vec features(kFlowScalarFeatures);
    features << apply_normalization(flow.avg_load_bps, Feature::FlowAvgLoad, stats),
        apply_normalization(flow.packet_size_bits, Feature::FlowPacketSize, stats),
        apply_normalization(static_cast<double>(flow.num_packets), Feature::FlowNumPackets, stats);
    const NodeId input = tape.concat(tape.constant(std::move(features)), h_pkts);
    out.push_back(mlp_forward(tape, weights.flow_encoder, input));
  }
  return out;
}

std::vector<NodeId> encode_linkports(Tape& tape, const NetworkScenario& scenario,
                                     const ModelWeights& weights, const NormStats& stats) {
  std::vector<NodeId> out;
  out.reserve(scenario.linkports().size());
  for (std::size_t i = 0; i < scenario.linkports().size(); ++i) {
    const LinkPort& lp = scenario.linkports()[i];
    const DeviceKind kind = scenario.devices()[scenario.owner_of(i)].kind;
    Vec x(kLinkFeatures);
    x << apply_normalization(lp.bandwidth_bps, Feature::LinkBandwidth, stats);
    const MlpWeights& encoder = kind == DeviceKind::Router ? weights.linkport_encoder_router
                                                           : weights.linkport_encoder_switch;
    out.push_back(mlp_forward(tape, encoder, tape.constant(std::move(x))));
  }
  return out;
}

std::vector<NodeId> encode_devices(Tape& tape, const NetworkScenario& scenario,
                                   const ModelWeights& weights, std::span<const NodeId> h_lq) {
  if (h_lq.size() != scenario.linkports().size()) {
    throw Error(ErrorCode::ShapeMismatch, "encode_devices: one embedding per linkport expected");
  }
  const auto lq_width = static_cast<Eigen::Index>(weights.linkport_update.hidden());
  std::vector<NodeId> out;
  out.reserve(scenario.devices().size());
  std::vector<NodeId> terms;
  for (std::size_t d = 0; d < scenario.devices().size(); ++d) {
    terms.clear();
    for (std::size_t port : scenario.device_ports(d)) terms.push_back(h_lq[port]);
    const NodeId sum = tape.canonical_sum(terms, lq_width);
    const MlpWeights& encoder = scenario.devices()[d].kind == DeviceKind::Router
                                    ? weights.device_encoder_router
                                    : weights.device_encoder_switch;
    out.push_back(mlp_forward(tape, encoder, sum));
  }
  return out;
}

EmbeddingState initial_state(Tape& tape, const NetworkScenario& scenario,
                             const ModelWeights& weights, const NormStats& stats) {
  EmbeddingState s;
  s.h_f = encode_flows(tape, scenario, weights, stats);
  s.h_lq = encode_linkports(tape, scenario, weights, stats);
  s.h_d = encode_devices(tape, scenario, weights, s.h_lq);
  return s;
}

EmbeddingState message_passing_iteration(Tape& tape, const NetworkScenario& scenario,
                                         const ModelWeights& weights,
                                         const EmbeddingState& previous) {
  EmbeddingState next;
  next.iteration = previous.iteration + 1;
  const std::size_t n_flows = scenario.flows().size();
  next.h_f.resize(n_flows);
  next.m_tilde.resize(n_flows);

  // Flows: walk the path, feeding (device state, link-port state) per hop.
  for (std::size_t f = 0; f < n_flows; ++f) {
    NodeId h = previous.h_f.at(f);
    auto& partial = next.m_tilde[f];
    partial.reserve(scenario.hops(f).size());
    for (const HopIndex& hop : scenario.hops(f)) {
      const NodeId x = tape.concat(previous.h_d.at(hop.device), previous.h_lq.at(hop.linkport));
      h = tape.gru_cell(weights.flow_rnn, x, h);
      partial.push_back(h);
    }
    next.h_f[f] = h;
  }

  // Link-ports: aggregate the partial states of every crossing flow.
  const Eigen::Index flow_width = width(weights.flow_rnn);
  next.h_lq.resize(scenario.linkports().size());
  std::vector<NodeId> terms;
  for (std::size_t lq = 0; lq < scenario.linkports().size(); ++lq) {
    terms.clear();
    for (const FlowPosition& fp : scenario.crossings(lq)) {
      terms.push_back(next.m_tilde[fp.flow][fp.position]);
    }
    const NodeId message = tape.canonical_sum(terms, flow_width);
    next.h_lq[lq] = tape.gru_cell(weights.linkport_update, message, previous.h_lq.at(lq));
  }

  // Devices: aggregate their freshly updated ports.
  const Eigen::Index lq_width = width(weights.linkport_update);
  next.h_d.resize(scenario.devices().size());
  for (std::size_t d = 0; d < scenario.devices().size(); ++d) {
    terms.clear();
    for (std::size_t port : scenario.device_ports(d)) terms.push_back(next.h_lq[port]);
    const NodeId message = tape.canonical_sum(terms, lq_width);
    next.h_d[d] = tape.gru_cell(weights.device_update, message, previous.h_d.at(d));
  }
  return next;
}

PartialFlowStates partial_flow_values(const Tape& tape, const EmbeddingState& state) {
  PartialFlowStates out(state.m_tilde.size());
  for (std::size_t f = 0; f < state.m_tilde.size(); ++f) {
    out[f].reserve(state.m_tilde[f].size());
    for (NodeId id : state.m_tilde[f]) out[f].push_back(tape.value(id));
  }
  return out;
}

bool has_converged(const PartialFlowStates& current, const PartialFlowStates& previous,
                   double threshold, double quantile) {
  if (current.size() != previous.size()) {
    throw Error(ErrorCode::ShapeMismatch, "has_converged: flow counts differ");
  }
  if (current.empty()) return true;
  std::size_t settled = 0;
  for (std::size_t f = 0; f < current.size(); ++f) {
    if (current[f].size() != previous[f].size()) {
      throw Error(ErrorCode::ShapeMismatch, "has_converged: path lengths differ");
    }
    double acc = 0.0;
    std::size_t terms = 0;
    for (std::size_t p = 0; p < current[f].size(); ++p) {
      const Vec& now = current[f][p];
      const Vec& before = previous[f][p];
      if (now.size() != before.size()) {
        throw Error(ErrorCode::ShapeMismatch, "has_converged: state widths differ");
      }
      acc += ((now - before).cwiseAbs().array() / (before.cwiseAbs().array() + 1e-9)).sum();
      terms += static_cast<std::size_t>(now.size());
    }
    const double rdiff = terms == 0 ? 0.0 : acc / static_cast<double>(terms);
    if (rdiff < threshold) ++settled;
  }
  return static_cast<double>(settled) >= quantile * static_cast<double>(current.size());
}

std::size_t iterate_message_passing(const std::function<PartialFlowStates()>& step,
                                    std::size_t t_max, double threshold, double quantile) {
  PartialFlowStates previous;
  for (std::size_t t = 1; t <= t_max; ++t) {
    PartialFlowStates current = step();
    if (t >= 2 && threshold > 0.0 && has_converged(current, previous, threshold, quantile)) {
      return t;
    }
    previous = std::move(current);
  }
  return t_max;
}

double transmission_delay(const NetworkScenario& scenario, std::size_t flow) {
  const Flow& f = scenario.flows().at(flow);
  double total = 0.0;
  for (const HopIndex& hop : scenario.hops(flow)) {
    total += f.packet_size_bits / scenario.linkports()[hop.linkport].bandwidth_bps;
  }
  return total;
}

double propagation_delay(const NetworkScenario& scenario, std::size_t flow) {
  double total = 0.0;
  for (const HopIndex& hop : scenario.hops(flow)) {
    total += scenario.linkports()[hop.linkport].propagation_delay_s;
  }
  return total;
}

std::vector<NodeId> readout(Tape& tape, const NetworkScenario& scenario,
                            const ModelWeights& weights,
                            const std::vector<std::vector<NodeId>>& m_tilde,
                            double queue_delay_unit_s) {
  if (m_tilde.size() != scenario.flows().size()) {
    throw Error(ErrorCode::ShapeMismatch, "readout: one partial state list per flow expected");
  }
  std::vector<NodeId> out;
  out.reserve(m_tilde.size());
  std::vector<NodeId> marginal;
  for (std::size_t f = 0; f < m_tilde.size(); ++f) {
    marginal.clear();
    for (NodeId m : m_tilde[f]) marginal.push_back(tape.softplus(mlp_forward(tape, weights.readout, m)));
    const NodeId queuing = tape.scale(tape.sum(marginal, 1), queue_delay_unit_s);
    out.push_back(
        tape.add_scalar(queuing, transmission_delay(scenario, f) + propagation_delay(scenario, f)));
  }
  return out;
}

ForwardResult forward(Tape& tape, const NetworkScenario& scenario, const ModelWeights& weights,
                      const NormStats& stats, const ModelConfig& config) {
  config.validate();
  EmbeddingState state = initial_state(tape, scenario, weights, stats);
  ForwardResult result;
  result.iterations = iterate_message_passing(
      [&] {
        state = message_passing_iteration(tape, scenario, weights, state);
        return partial_flow_values(tape, state);
      },
      config.t_max, config.convergence_threshold, config.convergence_quantile);
  result.predictions = readout(tape, scenario, weights, state.m_tilde, config.queue_delay_unit_s);
  return result;
}

Prediction predict(const NetworkScenario& scenario, const ModelParams& params,
                   const NormStats& stats, const ModelConfig& config) {
  Tape tape(false);
  const ModelWeights weights = bind_weights(params);
  const ForwardResult fr = forward(tape, scenario, weights, stats, config);
  Prediction out;
  out.iterations = fr.iterations;
  for (NodeId id : fr.predictions) out.delays_s.push_back(tape.scalar(id));
  return out;
}

LossAndGradient loss_and_gradient(const NetworkScenario& scenario, const ModelParams& params,
                                  const NormStats& stats, const ModelConfig& config) {
  const std::vector<double>& labels = require_labels(scenario);
  LossAndGradient out;
  out.gradients = params;
  out.gradients.fill(0.0);
  Tape tape(true);
  const ModelWeights weights = bind_weights(params, &out.gradients);
  const ForwardResult fr = forward(tape, scenario, weights, stats, config);
  const NodeId loss = tape.log_mse(fr.predictions, labels);
  tape.backward(loss);
  out.loss = tape.scalar(loss);
  out.iterations = fr.iterations;
  for (NodeId id : fr.predictions) out.predictions.push_back(tape.scalar(id));
  return out;
}

double loss_value(const NetworkScenario& scenario, const ModelParams& params,
                  const NormStats& stats, const ModelConfig& config) {
  const std::vector<double>& labels = require_labels(scenario);
  Tape tape(false);
  const ModelWeights weights = bind_weights(params);
  const ForwardResult fr = forward(tape, scenario, weights, stats, config);
  return tape.scalar(tape.log_mse(fr.predictions, labels));
}

}  // namespace netdelay
