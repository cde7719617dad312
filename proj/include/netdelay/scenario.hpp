#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace netdelay {

using Id = std::string;

enum class DeviceKind { Router, Switch };
enum class Distribution { CBR, MB };

/// Number of 1 ms bins kept from the first captured second of each flow.
inline constexpr std::size_t kBinCount = 1000;
inline constexpr double kBinWidthSeconds = 0.001;

struct Device {
  Id id;
  DeviceKind kind = DeviceKind::Router;
  std::vector<Id> port_ids;

  bool operator==(const Device&) const = default;
};

/// A physical link fused with the single device port that transmits onto it.
struct LinkPort {
  Id id;
  Id device_id;
  double bandwidth_bps = 0.0;
  double propagation_delay_s = 0.0;

  bool operator==(const LinkPort&) const = default;
};

struct PacketBin {
  std::uint64_t packet_count = 0;
  double bits = 0.0;

  bool operator==(const PacketBin&) const = default;
};

struct Flow {
  Id id;
  std::vector<Id> path;
  double avg_load_bps = 0.0;
  std::uint64_t num_packets = 0;
  double packet_size_bits = 0.0;
  std::vector<PacketBin> packet_bins;
  Distribution distribution = Distribution::CBR;  // metadata, never a model input

  bool operator==(const Flow&) const = default;
};

struct FlowPosition {
  std::size_t flow = 0;      // index into NetworkScenario::flows()
  std::size_t position = 0;  // index into that flow's path

  bool operator==(const FlowPosition&) const = default;
};

struct FlowCrossing {
  Id flow_id;
  std::size_t position = 0;

  bool operator==(const FlowCrossing&) const = default;
};

struct Hop {
  Id linkport_id;
  Id device_id;

  bool operator==(const Hop&) const = default;
};

/// Index-level view of one hop, used by the message-passing kernels.
struct HopIndex {
  std::size_t linkport = 0;
  std::size_t device = 0;
};

/// One validated sample of the dataset. Instances are only produced by
/// build_scenario, are immutable afterwards and keep devices, linkports and
/// flows sorted by id.
class NetworkScenario {
 public:
  const std::vector<Device>& devices() const noexcept { return devices_; }
  const std::vector<LinkPort>& linkports() const noexcept { return linkports_; }
  const std::vector<Flow>& flows() const noexcept { return flows_; }
  const std::optional<std::vector<double>>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return labels_.has_value(); }

  std::size_t device_index(const Id& id) const;
  std::size_t linkport_index(const Id& id) const;
  std::size_t flow_index(const Id& id) const;

  const std::vector<HopIndex>& hops(std::size_t flow) const { return hops_.at(flow); }
  const std::vector<FlowPosition>& crossings(std::size_t linkport) const {
    return crossings_.at(linkport);
  }
  const std::vector<std::size_t>& device_ports(std::size_t device) const {
    return device_ports_.at(device);
  }
  std::size_t owner_of(std::size_t linkport) const { return owner_.at(linkport); }

  bool operator==(const NetworkScenario& other) const {
    return devices_ == other.devices_ && linkports_ == other.linkports_ &&
           flows_ == other.flows_ && labels_ == other.labels_;
  }

 private:
  friend NetworkScenario build_scenario(std::vector<Device>, std::vector<LinkPort>,
                                        std::vector<Flow>, std::optional<std::vector<double>>);

  std::vector<Device> devices_;
  std::vector<LinkPort> linkports_;
  std::vector<Flow> flows_;
  std::optional<std::vector<double>> labels_;

  std::unordered_map<Id, std::size_t> device_by_id_;
  std::unordered_map<Id, std::size_t> linkport_by_id_;
  std::unordered_map<Id, std::size_t> flow_by_id_;
  std::vector<std::vector<HopIndex>> hops_;
  std::vector<std::vector<FlowPosition>> crossings_;
  std::vector<std::vector<std::size_t>> device_ports_;
  std::vector<std::size_t> owner_;
};

/// Validates the raw component lists and builds the index structures.
/// Labels, when given, are aligned with `flows` as passed in; they are
/// reordered together with the flows. Throws netdelay::Error on any
/// invariant violation; no partially built scenario escapes.
NetworkScenario build_scenario(std::vector<Device> devices, std::vector<LinkPort> linkports,
                               std::vector<Flow> flows,
                               std::optional<std::vector<double>> labels = std::nullopt);

/// (flow_id, position) pairs whose path crosses `linkport_id`, sorted by
/// (flow_id, position).
std::vector<FlowCrossing> flows_through(const NetworkScenario& scenario, const Id& linkport_id);

std::vector<Id> ports_of_device(const NetworkScenario& scenario, const Id& device_id);

std::vector<Hop> path_hops(const NetworkScenario& scenario, const Id& flow_id);

/// Same scenario with labels replaced (or removed).
NetworkScenario with_labels(const NetworkScenario& scenario,
                            std::optional<std::vector<double>> labels);

std::string_view to_string(DeviceKind kind) noexcept;
std::string_view to_string(Distribution distribution) noexcept;

}  // namespace netdelay
