#include "netdelay/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "netdelay/error.hpp"

namespace netdelay {

namespace {

template <typename T>
void sort_by_id(std::vector<T>& items) {
  std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
}

template <typename T>
std::unordered_map<Id, std::size_t> index_by_id(const std::vector<T>& items, std::string_view what) {
  std::unordered_map<Id, std::size_t> index;
  index.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!index.emplace(items[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, std::string(what) + " id '" + items[i].id + "' repeated");
    }
  }
  return index;
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void validate_flow_fields(const Flow& flow) {
  const std::string where = "flow '" + flow.id + "': ";
  if (!positive_finite(flow.avg_load_bps)) {
    throw Error(ErrorCode::InvalidField, where + "avg_load_bps must be positive");
  }
  if (flow.num_packets == 0) {
    throw Error(ErrorCode::InvalidField, where + "num_packets must be positive");
  }
  if (!positive_finite(flow.packet_size_bits)) {
    throw Error(ErrorCode::InvalidField, where + "packet_size_bits must be positive");
  }
  if (flow.packet_bins.size() != kBinCount) {
    throw Error(ErrorCode::InvalidField, where + "expected " + std::to_string(kBinCount) +
                                             " packet bins, got " +
                                             std::to_string(flow.packet_bins.size()));
  }
  for (std::size_t k = 0; k < flow.packet_bins.size(); ++k) {
    const PacketBin& bin = flow.packet_bins[k];
    if (bin.bits != static_cast<double>(bin.packet_count) * flow.packet_size_bits) {
      throw Error(ErrorCode::InvalidField,
                  where + "bin " + std::to_string(k) + " bits != packet_count * packet_size_bits");
    }
  }
}

}  // namespace

NetworkScenario build_scenario(std::vector<Device> devices, std::vector<LinkPort> linkports,
                               std::vector<Flow> flows, std::optional<std::vector<double>> labels) {
  if (labels) {
    if (labels->size() != flows.size()) {
      throw Error(ErrorCode::InvalidField, "expected " + std::to_string(flows.size()) +
                                               " labels, got " + std::to_string(labels->size()));
    }
    for (double y : *labels) {
      if (!(std::isfinite(y) && y > 0.0)) {
        throw Error(ErrorCode::NonPositiveLabel, "label " + std::to_string(y) + " is not positive");
      }
    }
    // Labels travel with their flows through the id sort.
    std::vector<std::size_t> order(flows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return flows[a].id < flows[b].id; });
    std::vector<Flow> sorted_flows;
    std::vector<double> sorted_labels;
    sorted_flows.reserve(flows.size());
    sorted_labels.reserve(flows.size());
    for (std::size_t i : order) {
      sorted_flows.push_back(std::move(flows[i]));
      sorted_labels.push_back((*labels)[i]);
    }
    flows = std::move(sorted_flows);
    labels = std::move(sorted_labels);
  } else {
    sort_by_id(flows);
  }
  sort_by_id(devices);
  sort_by_id(linkports);

  NetworkScenario s;
  s.device_by_id_ = index_by_id(devices, "device");
  s.linkport_by_id_ = index_by_id(linkports, "linkport");
  s.flow_by_id_ = index_by_id(flows, "flow");

  s.owner_.resize(linkports.size());
  for (std::size_t i = 0; i < linkports.size(); ++i) {
    const LinkPort& lp = linkports[i];
    if (!positive_finite(lp.bandwidth_bps)) {
      throw Error(ErrorCode::InvalidField, "linkport '" + lp.id + "': bandwidth must be positive");
    }
    if (!(std::isfinite(lp.propagation_delay_s) && lp.propagation_delay_s >= 0.0)) {
      throw Error(ErrorCode::InvalidField,
                  "linkport '" + lp.id + "': propagation delay must be non-negative");
    }
    auto dev = s.device_by_id_.find(lp.device_id);
    if (dev == s.device_by_id_.end()) {
      throw Error(ErrorCode::DanglingReference,
                  "linkport '" + lp.id + "' references unknown device '" + lp.device_id + "'");
    }
    s.owner_[i] = dev->second;
  }

  s.device_ports_.resize(devices.size());
  std::vector<bool> claimed(linkports.size(), false);
  for (std::size_t d = 0; d < devices.size(); ++d) {
    const Device& device = devices[d];
    if (device.port_ids.empty()) {
      throw Error(ErrorCode::InvalidField, "device '" + device.id + "' has no ports");
    }
    std::unordered_set<Id> seen;
    for (const Id& port : device.port_ids) {
      if (!seen.insert(port).second) {
        throw Error(ErrorCode::DuplicateId,
                    "device '" + device.id + "' lists port '" + port + "' twice");
      }
      auto lp = s.linkport_by_id_.find(port);
      if (lp == s.linkport_by_id_.end()) {
        throw Error(ErrorCode::DanglingReference,
                    "device '" + device.id + "' references unknown port '" + port + "'");
      }
      if (s.owner_[lp->second] != d) {
        throw Error(ErrorCode::DanglingReference, "port '" + port + "' listed by device '" +
                                                      device.id + "' belongs to '" +
                                                      linkports[lp->second].device_id + "'");
      }
      claimed[lp->second] = true;
      s.device_ports_[d].push_back(lp->second);
    }
  }
  for (std::size_t i = 0; i < linkports.size(); ++i) {
    if (!claimed[i]) {
      throw Error(ErrorCode::DanglingReference, "linkport '" + linkports[i].id +
                                                    "' is not listed by its device '" +
                                                    linkports[i].device_id + "'");
    }
  }

  s.hops_.resize(flows.size());
  s.crossings_.resize(linkports.size());
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const Flow& flow = flows[f];
    if (flow.path.empty()) {
      throw Error(ErrorCode::EmptyPath, "flow '" + flow.id + "' has an empty path");
    }
    std::unordered_set<Id> on_path;
    for (std::size_t pos = 0; pos < flow.path.size(); ++pos) {
      const Id& port = flow.path[pos];
      auto lp = s.linkport_by_id_.find(port);
      if (lp == s.linkport_by_id_.end()) {
        throw Error(ErrorCode::DanglingReference,
                    "flow '" + flow.id + "' path references unknown linkport '" + port + "'");
      }
      if (!on_path.insert(port).second) {
        throw Error(ErrorCode::DuplicatePortInPath,
                    "flow '" + flow.id + "' crosses linkport '" + port + "' twice");
      }
      s.hops_[f].push_back(HopIndex{lp->second, s.owner_[lp->second]});
      s.crossings_[lp->second].push_back(FlowPosition{f, pos});
    }
    validate_flow_fields(flow);
  }

  s.devices_ = std::move(devices);
  s.linkports_ = std::move(linkports);
  s.flows_ = std::move(flows);
  s.labels_ = std::move(labels);
  return s;
}

std::size_t NetworkScenario::device_index(const Id& id) const {
  auto it = device_by_id_.find(id);
  if (it == device_by_id_.end()) throw Error(ErrorCode::UnknownDevice, "'" + id + "'");
  return it->second;
}

std::size_t NetworkScenario::linkport_index(const Id& id) const {
  auto it = linkport_by_id_.find(id);
  if (it == linkport_by_id_.end()) throw Error(ErrorCode::UnknownLinkPort, "'" + id + "'");
  return it->second;
}

std::size_t NetworkScenario::flow_index(const Id& id) const {
  auto it = flow_by_id_.find(id);
  if (it == flow_by_id_.end()) throw Error(ErrorCode::UnknownFlow, "'" + id + "'");
  return it->second;
}

std::vector<FlowCrossing> flows_through(const NetworkScenario& scenario, const Id& linkport_id) {
  std::vector<FlowCrossing> out;
  // Flows are stored sorted by id, and a loop-free path crosses a port at
  // most once, so crossing order is already (flow_id, position) order.
  for (const FlowPosition& fp : scenario.crossings(scenario.linkport_index(linkport_id))) {
    out.push_back(FlowCrossing{scenario.flows()[fp.flow].id, fp.position});
  }
  return out;
}

std::vector<Id> ports_of_device(const NetworkScenario& scenario, const Id& device_id) {
  return scenario.devices()[scenario.device_index(device_id)].port_ids;
}

std::vector<Hop> path_hops(const NetworkScenario& scenario, const Id& flow_id) {
  std::vector<Hop> out;
  for (const HopIndex& hop : scenario.hops(scenario.flow_index(flow_id))) {
    out.push_back(Hop{scenario.linkports()[hop.linkport].id, scenario.devices()[hop.device].id});
  }
  return out;
}

NetworkScenario with_labels(const NetworkScenario& scenario,
                            std::optional<std::vector<double>> labels) {
  return build_scenario(scenario.devices(), scenario.linkports(), scenario.flows(),
                        std::move(labels));
}

std::string_view to_string(DeviceKind kind) noexcept {
  return kind == DeviceKind::Router ? "Router" : "Switch";
}

std::string_view to_string(Distribution distribution) noexcept {
  return distribution == Distribution::CBR ? "CBR" : "MB";
}

}  // namespace netdelay
