#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>
#include <vector>

#include "netdelay/scenario.hpp"
#include "netdelay/trace.hpp"

namespace netdelay {

struct TrafficSpec {
  Distribution distribution = Distribution::CBR;
  double avg_load_bps = 0.0;
  double packet_size_bits = 0.0;
  /// Multi-Burst only: packets per burst, sent back to back at line_rate_bps.
  std::size_t burst_length_packets = 1;
  double line_rate_bps = 0.0;

  void validate() const;
};

struct SimConfig {
  double duration_s = 10.0;
  /// Only packets sent during the final capture_window_s seconds are measured.
  double capture_window_s = 5.0;
  std::size_t buffer_packets = 64;  // per port, packets in service included
  /// Extra time after duration_s during which queues drain (no new traffic).
  double drain_s = 5.0;
  /// Keep every transmission-completion time per port in the outcome.
  bool record_port_log = false;

  void validate() const;
};

struct Topology {
  std::vector<Device> devices;
  std::vector<LinkPort> linkports;
  /// Receiving device of each linkport, keyed by linkport id.
  std::map<Id, Id> peer;
};

struct TopologyOptions {
  std::vector<double> bandwidth_choices_bps{1e7, 2e7, 4e7};
  double propagation_delay_s = 1e-5;
  /// Probability of each extra (non-tree) link between two devices.
  double extra_link_probability = 0.2;
};

/// Connected random topology; every link yields one LinkPort per direction,
/// owned by the transmitting device. `switch_fraction` is the probability
/// that a device is a switch.
Topology gen_topology(std::uint64_t seed, std::size_t n_devices, double switch_fraction,
                      const TopologyOptions& options = {});

/// Hop-count shortest path from src to dst as a list of LinkPort ids; ties go
/// to the lexicographically smallest neighbour.
std::vector<Id> shortest_path(const Topology& topology, const Id& src, const Id& dst);

/// Send times in [0, duration_s). The seed only shifts the phase.
std::vector<PacketRecord> gen_flow_packets(const TrafficSpec& spec, double duration_s,
                                           std::uint64_t seed);

struct FlowSkeleton {
  Id id;
  std::vector<Id> path;
  TrafficSpec traffic;
};

struct ScenarioSkeleton {
  Topology topology;
  std::vector<FlowSkeleton> flows;
};

struct FlowCounters {
  Id flow_id;
  std::size_t injected = 0;
  std::size_t delivered = 0;
  std::size_t dropped = 0;
  std::size_t in_flight = 0;
  std::size_t captured_sent = 0;
  std::size_t captured_delivered = 0;
  double mean_delay_s = 0.0;  // over captured and delivered packets
  double min_delay_s = 0.0;   // over every delivered packet
};

struct SimOutcome {
  NetworkScenario scenario;
  std::vector<FlowCounters> counters;  // aligned with skeleton.flows
  bool fifo_ok = true;                 // completion times strictly increase per port
  std::vector<std::vector<double>> port_log;  // per linkport (scenario order) when recorded
};

/// FIFO store-and-forward simulation with drop-tail buffers. `packet_streams`
/// is aligned with skeleton.flows and carries absolute send times.
SimOutcome simulate(const ScenarioSkeleton& skeleton,
                    const std::vector<std::vector<PacketRecord>>& packet_streams,
                    const SimConfig& config);

struct DatasetConfig {
  std::size_t num_scenarios = 10;
  std::size_t min_devices = 4;
  std::size_t max_devices = 8;
  double switch_fraction = 0.25;
  std::size_t min_flows = 4;
  std::size_t max_flows = 10;
  double min_utilization = 0.1;
  double max_utilization = 0.9;
  /// Share of scenarios drawn from the MB-only group; the rest mix CBR and MB.
  double mb_only_fraction = 0.5;
  std::size_t min_burst = 5;
  std::size_t max_burst = 50;
  std::vector<double> packet_size_choices_bits{4000.0, 8000.0, 12000.0};
  TopologyOptions topology;
  SimConfig sim;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 1;

  void validate() const;
};

DatasetConfig dataset_config_from_text(std::string_view text, std::string_view source = "<memory>");
DatasetConfig load_dataset_config(const std::filesystem::path& path);
std::string dataset_config_to_text(const DatasetConfig& config);

/// One labelled scenario of the dataset, reproducible from (config, index).
NetworkScenario gen_scenario(const DatasetConfig& config, std::size_t index);

/// Writes scenario_NNNN.json files and manifest.json into `out_dir`.
DatasetManifest gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                            std::size_t jobs = 1);

}  // namespace netdelay
