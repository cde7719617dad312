#include "netdelay/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "netdelay/error.hpp"
#include "parallel.hpp"

namespace netdelay {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

/// [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::string device_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "d%02zu", i);
  return buf;
}

std::string flow_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "f%03zu", i);
  return buf;
}

}  // namespace

void TrafficSpec::validate() const {
  if (!(avg_load_bps > 0.0)) throw Error(ErrorCode::InvalidConfig, "avg_load_bps must be positive");
  if (!(packet_size_bits > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "packet_size_bits must be positive");
  }
  if (burst_length_packets < 1) {
    throw Error(ErrorCode::InvalidConfig, "burst_length_packets must be at least 1");
  }
  if (distribution == Distribution::MB && !(line_rate_bps >= avg_load_bps)) {
    throw Error(ErrorCode::InvalidConfig, "Multi-Burst line rate must be at least the average load");
  }
}

void SimConfig::validate() const {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be positive");
  if (!(capture_window_s > 0.0 && capture_window_s <= duration_s)) {
    throw Error(ErrorCode::InvalidConfig, "capture window must lie in (0, duration]");
  }
  if (buffer_packets < 1) throw Error(ErrorCode::InvalidConfig, "buffer_packets must be >= 1");
  if (!(drain_s >= 0.0)) throw Error(ErrorCode::InvalidConfig, "drain_s must be non-negative");
}

// ---------------------------------------------------------------------------
// Topology

Topology gen_topology(std::uint64_t seed, std::size_t n_devices, double switch_fraction,
                      const TopologyOptions& options) {
  if (n_devices < 2 || n_devices > 16) {
    throw Error(ErrorCode::InvalidSize, "n_devices must lie in [2, 16], got " + std::to_string(n_devices));
  }
  if (!(switch_fraction >= 0.0 && switch_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "switch_fraction must lie in [0, 1]");
  }
  if (options.bandwidth_choices_bps.empty()) {
    throw Error(ErrorCode::InvalidConfig, "no bandwidth choices");
  }
  std::mt19937_64 rng(seed);
  std::vector<DeviceKind> kinds(n_devices);
  for (auto& k : kinds) k = uniform01(rng) < switch_fraction ? DeviceKind::Switch : DeviceKind::Router;

  std::set<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 1; i < n_devices; ++i) links.emplace(rng() % i, i);
  for (std::size_t i = 0; i < n_devices; ++i) {
    for (std::size_t j = i + 1; j < n_devices; ++j) {
      if (!links.count({i, j}) && uniform01(rng) < options.extra_link_probability) links.emplace(i, j);
    }
  }

  Topology topo;
  std::vector<std::vector<Id>> ports(n_devices);
  for (const auto& [a, b] : links) {
    const double bw =
        options.bandwidth_choices_bps[rng() % options.bandwidth_choices_bps.size()];
    for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      LinkPort lp;
      lp.id = device_name(from) + "-" + device_name(to);
      lp.device_id = device_name(from);
      lp.bandwidth_bps = bw;
      lp.propagation_delay_s = options.propagation_delay_s;
      ports[from].push_back(lp.id);
      topo.peer[lp.id] = device_name(to);
      topo.linkports.push_back(std::move(lp));
    }
  }
  std::sort(topo.linkports.begin(), topo.linkports.end(),
            [](const LinkPort& x, const LinkPort& y) { return x.id < y.id; });
  for (std::size_t i = 0; i < n_devices; ++i) {
    std::sort(ports[i].begin(), ports[i].end());
    topo.devices.push_back(Device{device_name(i), kinds[i], std::move(ports[i])});
  }
  return topo;
}

std::vector<Id> shortest_path(const Topology& topology, const Id& src, const Id& dst) {
  std::map<Id, std::vector<std::pair<Id, Id>>> adjacency;  // device -> (peer, linkport)
  std::set<Id> devices;
  for (const Device& d : topology.devices) devices.insert(d.id);
  if (!devices.count(src)) throw Error(ErrorCode::UnknownDevice, "'" + src + "'");
  if (!devices.count(dst)) throw Error(ErrorCode::UnknownDevice, "'" + dst + "'");
  for (const LinkPort& lp : topology.linkports) {
    auto peer = topology.peer.find(lp.id);
    if (peer == topology.peer.end() || !devices.count(peer->second)) {
      throw Error(ErrorCode::DanglingReference, "linkport '" + lp.id + "' has no known peer device");
    }
    adjacency[lp.device_id].emplace_back(peer->second, lp.id);
  }
  for (auto& [_, next] : adjacency) std::sort(next.begin(), next.end());

  std::map<Id, std::pair<Id, Id>> parent;  // device -> (previous device, linkport)
  std::queue<Id> frontier;
  frontier.push(src);
  std::set<Id> seen{src};
  while (!frontier.empty()) {
    const Id at = frontier.front();
    frontier.pop();
    if (at == dst) break;
    for (const auto& [peer, lp] : adjacency[at]) {
      if (seen.insert(peer).second) {
        parent[peer] = {at, lp};
        frontier.push(peer);
      }
    }
  }
  if (src != dst && !parent.count(dst)) {
    throw Error(ErrorCode::DanglingReference, "no route from '" + src + "' to '" + dst + "'");
  }
  std::vector<Id> path;
  for (Id at = dst; at != src; at = parent[at].first) path.push_back(parent[at].second);
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------
// Traffic

std::vector<PacketRecord> gen_flow_packets(const TrafficSpec& spec, double duration_s,
                                           std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<PacketRecord> out;
  if (spec.distribution == Distribution::CBR) {
    const double interval = spec.packet_size_bits / spec.avg_load_bps;
    const double phase = uniform01(rng) * interval;
    for (std::size_t k = 0;; ++k) {
      const double t = phase + static_cast<double>(k) * interval;
      if (t >= duration_s) break;
      out.push_back({t, spec.packet_size_bits});
    }
    return out;
  }
  const auto burst = static_cast<double>(spec.burst_length_packets);
  const double period = burst * spec.packet_size_bits / spec.avg_load_bps;
  const double spacing = spec.packet_size_bits / spec.line_rate_bps;
  const double slack = std::max(0.0, period - burst * spacing);
  const double phase = uniform01(rng) * slack;
  for (std::size_t j = 0;; ++j) {
    const double start = phase + static_cast<double>(j) * period;
    if (start >= duration_s) break;
    for (std::size_t i = 0; i < spec.burst_length_packets; ++i) {
      const double t = start + static_cast<double>(i) * spacing;
      if (t >= duration_s) break;
      out.push_back({t, spec.packet_size_bits});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrete-event simulation

namespace {

enum class EventKind : std::uint8_t { Inject, Depart, Arrive };

struct Event {
  double time;
  std::uint64_t order;  // FIFO among simultaneous events
  EventKind kind;
  std::uint32_t subject;  // flow for Inject, packet otherwise
  std::uint32_t port;

  bool operator>(const Event& o) const {
    return time != o.time ? time > o.time : order > o.order;
  }
};

struct SimPacket {
  std::uint32_t flow;
  std::uint32_t hop;
  double sent;
  double size_bits;
};

struct PortState {
  std::deque<std::uint32_t> waiting;
  bool busy = false;
  double last_completion = -1.0;
};

}  // namespace

SimOutcome simulate(const ScenarioSkeleton& skeleton,
                    const std::vector<std::vector<PacketRecord>>& packet_streams,
                    const SimConfig& config) {
  config.validate();
  const auto& flows = skeleton.flows;
  if (packet_streams.size() != flows.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one packet stream per flow expected");
  }
  const auto& linkports = skeleton.topology.linkports;
  std::unordered_map<Id, std::uint32_t> port_index;
  for (std::size_t i = 0; i < linkports.size(); ++i) {
    port_index.emplace(linkports[i].id, static_cast<std::uint32_t>(i));
  }
  std::vector<std::vector<std::uint32_t>> routes(flows.size());
  for (std::size_t f = 0; f < flows.size(); ++f) {
    flows[f].traffic.validate();
    if (flows[f].path.empty()) throw Error(ErrorCode::EmptyPath, "flow '" + flows[f].id + "'");
    for (const Id& hop : flows[f].path) {
      auto it = port_index.find(hop);
      if (it == port_index.end()) {
        throw Error(ErrorCode::DanglingReference,
                    "flow '" + flows[f].id + "' uses unknown linkport '" + hop + "'");
      }
      routes[f].push_back(it->second);
    }
  }

  const double capture_start = config.duration_s - config.capture_window_s;
  const double horizon = config.duration_s + config.drain_s;

  SimOutcome outcome;
  outcome.counters.resize(flows.size());
  if (config.record_port_log) outcome.port_log.resize(linkports.size());
  std::vector<double> delay_sum(flows.size(), 0.0);
  std::vector<double> min_delay(flows.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> next_packet(flows.size(), 0);
  std::vector<PortState> ports(linkports.size());
  std::vector<SimPacket> packets;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t order = 0;

  for (std::size_t f = 0; f < flows.size(); ++f) {
    outcome.counters[f].flow_id = flows[f].id;
    if (!packet_streams[f].empty()) {
      events.push({packet_streams[f][0].timestamp_s, order++, EventKind::Inject,
                   static_cast<std::uint32_t>(f), routes[f][0]});
    }
  }

  auto start_service = [&](std::uint32_t pkt, std::uint32_t port, double now) {
    ports[port].busy = true;
    events.push({now + packets[pkt].size_bits / linkports[port].bandwidth_bps, order++,
                 EventKind::Depart, pkt, port});
  };
  auto arrive = [&](std::uint32_t pkt, std::uint32_t port, double now) {
    PortState& ps = ports[port];
    if (!ps.busy) {
      start_service(pkt, port, now);
    } else if (ps.waiting.size() + 1 < config.buffer_packets) {
      ps.waiting.push_back(pkt);
    } else {
      ++outcome.counters[packets[pkt].flow].dropped;
    }
  };

  while (!events.empty()) {
    const Event ev = events.top();
    if (ev.time > horizon) break;
    events.pop();
    switch (ev.kind) {
      case EventKind::Inject: {
        const std::uint32_t f = ev.subject;
        const PacketRecord& rec = packet_streams[f][next_packet[f]++];
        if (rec.timestamp_s < 0.0) {
          throw Error(ErrorCode::NegativeTimestamp, "flow '" + flows[f].id + "'");
        }
        const auto pkt = static_cast<std::uint32_t>(packets.size());
        packets.push_back({f, 0, rec.timestamp_s, rec.size_bits});
        FlowCounters& c = outcome.counters[f];
        ++c.injected;
        if (rec.timestamp_s >= capture_start && rec.timestamp_s < config.duration_s) ++c.captured_sent;
        if (next_packet[f] < packet_streams[f].size()) {
          events.push({packet_streams[f][next_packet[f]].timestamp_s, order++, EventKind::Inject, f,
                       ev.port});
        }
        arrive(pkt, ev.port, ev.time);
        break;
      }
      case EventKind::Arrive:
        arrive(ev.subject, ev.port, ev.time);
        break;
      case EventKind::Depart: {
        PortState& ps = ports[ev.port];
        if (!(ev.time > ps.last_completion)) outcome.fifo_ok = false;
        ps.last_completion = ev.time;
        if (config.record_port_log) outcome.port_log[ev.port].push_back(ev.time);

        SimPacket& p = packets[ev.subject];
        const double arrival = ev.time + linkports[ev.port].propagation_delay_s;
        const auto& route = routes[p.flow];
        if (p.hop + 1 < route.size()) {
          ++p.hop;
          events.push({arrival, order++, EventKind::Arrive, ev.subject, route[p.hop]});
        } else {
          FlowCounters& c = outcome.counters[p.flow];
          const double delay = arrival - p.sent;
          ++c.delivered;
          min_delay[p.flow] = std::min(min_delay[p.flow], delay);
          if (p.sent >= capture_start && p.sent < config.duration_s) {
            ++c.captured_delivered;
            delay_sum[p.flow] += delay;
          }
        }
        if (!ps.waiting.empty()) {
          const std::uint32_t next = ps.waiting.front();
          ps.waiting.pop_front();
          start_service(next, ev.port, ev.time);
        } else {
          ps.busy = false;
        }
        break;
      }
    }
  }

  std::vector<Flow> out_flows;
  std::vector<double> labels;
  for (std::size_t f = 0; f < flows.size(); ++f) {
    FlowCounters& c = outcome.counters[f];
    c.in_flight = c.injected - c.delivered - c.dropped;
    c.min_delay_s = c.delivered > 0 ? min_delay[f] : 0.0;
    if (c.captured_delivered == 0) {
      throw Error(ErrorCode::NoDeliveredPackets,
                  "flow '" + flows[f].id + "' delivered no packet sent in the capture window");
    }
    c.mean_delay_s = delay_sum[f] / static_cast<double>(c.captured_delivered);

    std::vector<PacketRecord> captured;
    for (const PacketRecord& rec : packet_streams[f]) {
      if (rec.timestamp_s >= capture_start && rec.timestamp_s < config.duration_s) {
        captured.push_back({rec.timestamp_s - capture_start, rec.size_bits});
      }
    }
    Flow flow;
    flow.id = flows[f].id;
    flow.path = flows[f].path;
    flow.avg_load_bps = flows[f].traffic.avg_load_bps;
    flow.num_packets = c.captured_sent;
    flow.packet_size_bits = flows[f].traffic.packet_size_bits;
    flow.packet_bins = bin_packets(captured, flow.packet_size_bits);
    flow.distribution = flows[f].traffic.distribution;
    out_flows.push_back(std::move(flow));
    labels.push_back(c.mean_delay_s);
  }
  outcome.scenario = build_scenario(skeleton.topology.devices, linkports, std::move(out_flows),
                                    std::move(labels));
  return outcome;
}

// ---------------------------------------------------------------------------
// Dataset generation

void DatasetConfig::validate() const {
  if (num_scenarios < 1) throw Error(ErrorCode::InvalidConfig, "num_scenarios must be >= 1");
  if (min_devices < 2 || max_devices > 16 || min_devices > max_devices) {
    throw Error(ErrorCode::InvalidConfig, "device range must satisfy 2 <= min <= max <= 16");
  }
  if (min_flows < 1 || min_flows > max_flows) {
    throw Error(ErrorCode::InvalidConfig, "flow range must satisfy 1 <= min <= max");
  }
  if (!(min_utilization > 0.0 && min_utilization <= max_utilization && max_utilization < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "utilization range must satisfy 0 < min <= max < 1");
  }
  if (!(mb_only_fraction >= 0.0 && mb_only_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "mb_only_fraction must lie in [0, 1]");
  }
  if (min_burst < 1 || min_burst > max_burst) {
    throw Error(ErrorCode::InvalidConfig, "burst range must satisfy 1 <= min <= max");
  }
  if (packet_size_choices_bits.empty()) throw Error(ErrorCode::InvalidConfig, "no packet sizes");
  for (double s : packet_size_choices_bits) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidConfig, "packet sizes must be positive");
  }
  if (!(validation_fraction >= 0.0 && test_fraction >= 0.0 &&
        validation_fraction + test_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "split fractions must be non-negative and sum to <= 1");
  }
  sim.validate();
}

namespace {

struct PlannedFlow {
  std::size_t src;
  std::size_t dst;
  Distribution distribution;
};

std::vector<PlannedFlow> plan_flows(std::size_t n_devices, std::size_t n_flows, bool mb_only,
                                    std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t s = 0; s < n_devices; ++s) {
    for (std::size_t d = 0; d < n_devices; ++d) {
      if (s != d) pairs.emplace_back(s, d);
    }
  }
  shuffle(pairs, rng);
  std::vector<PlannedFlow> out;
  for (const auto& [s, d] : pairs) {
    if (out.size() >= n_flows) break;
    if (mb_only) {
      out.push_back({s, d, Distribution::MB});
      continue;
    }
    // Mixed group: at most one CBR and one MB flow per pair.
    switch (rng() % 3) {
      case 0: out.push_back({s, d, Distribution::CBR}); break;
      case 1: out.push_back({s, d, Distribution::MB}); break;
      default:
        out.push_back({s, d, Distribution::CBR});
        if (out.size() < n_flows) out.push_back({s, d, Distribution::MB});
        break;
    }
  }
  return out;
}

NetworkScenario try_gen_scenario(const DatasetConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n_devices = uniform_int(rng, cfg.min_devices, cfg.max_devices);
  const Topology topo = gen_topology(rng(), n_devices, cfg.switch_fraction, cfg.topology);
  const bool mb_only = uniform01(rng) < cfg.mb_only_fraction;
  const std::size_t n_flows = uniform_int(rng, cfg.min_flows, cfg.max_flows);
  const std::vector<PlannedFlow> plan = plan_flows(n_devices, n_flows, mb_only, rng);

  std::unordered_map<Id, double> bandwidth;
  for (const LinkPort& lp : topo.linkports) bandwidth[lp.id] = lp.bandwidth_bps;

  ScenarioSkeleton skeleton;
  skeleton.topology = topo;
  std::vector<double> weight;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    FlowSkeleton fs;
    fs.id = flow_name(i);
    fs.path = shortest_path(topo, device_name(plan[i].src), device_name(plan[i].dst));
    fs.traffic.distribution = plan[i].distribution;
    fs.traffic.packet_size_bits =
        cfg.packet_size_choices_bits[rng() % cfg.packet_size_choices_bits.size()];
    fs.traffic.burst_length_packets = uniform_int(rng, cfg.min_burst, cfg.max_burst);
    fs.traffic.line_rate_bps = bandwidth.at(fs.path.front());
    weight.push_back(uniform(rng, 0.2, 1.0));
    skeleton.flows.push_back(std::move(fs));
  }

  // Scale loads so the busiest link sits at the drawn utilization.
  std::map<Id, double> link_weight;
  for (std::size_t i = 0; i < skeleton.flows.size(); ++i) {
    for (const Id& hop : skeleton.flows[i].path) link_weight[hop] += weight[i];
  }
  double peak = 0.0;
  for (const auto& [lp, w] : link_weight) peak = std::max(peak, w / bandwidth.at(lp));
  const double utilization = uniform(rng, cfg.min_utilization, cfg.max_utilization);
  const double scale = utilization / peak;

  std::vector<std::vector<PacketRecord>> streams;
  for (std::size_t i = 0; i < skeleton.flows.size(); ++i) {
    TrafficSpec& t = skeleton.flows[i].traffic;
    t.avg_load_bps = weight[i] * scale;
    if (t.distribution == Distribution::CBR) t.burst_length_packets = 1;
    streams.push_back(gen_flow_packets(t, cfg.sim.duration_s, rng()));
  }
  return simulate(skeleton, streams, cfg.sim).scenario;
}

std::string scenario_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenario_%04zu.json", index);
  return buf;
}

template <typename T>
void read_opt(const json& j, const char* key, T& into) {
  auto it = j.find(key);
  if (it != j.end()) into = it->get<T>();
}

}  // namespace

NetworkScenario gen_scenario(const DatasetConfig& config, std::size_t index) {
  constexpr std::size_t kAttempts = 20;
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return try_gen_scenario(config, derive_seed(config.seed, index, attempt));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDeliveredPackets || attempt + 1 == kAttempts) throw;
    }
  }
}

DatasetManifest gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                            std::size_t jobs) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());

  detail::parallel_for(config.num_scenarios, jobs, [&](std::size_t i) {
    save_scenario(gen_scenario(config, i), out_dir / scenario_file_name(i));
  });

  std::vector<std::size_t> order(config.num_scenarios);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(config.seed, 0xda7a5e7ULL));
  shuffle(order, rng);
  const auto n = static_cast<double>(config.num_scenarios);
  const auto n_val = static_cast<std::size_t>(std::llround(n * config.validation_fraction));
  const auto n_test = std::min(config.num_scenarios - n_val,
                               static_cast<std::size_t>(std::llround(n * config.test_fraction)));
  DatasetManifest m;
  m.generator_seed = config.seed;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::string name = scenario_file_name(order[k]);
    if (k < n_val) {
      m.validation.push_back(name);
    } else if (k < n_val + n_test) {
      m.test.push_back(name);
    } else {
      m.train.push_back(name);
    }
  }
  for (auto* list : {&m.train, &m.validation, &m.test}) std::sort(list->begin(), list->end());
  save_manifest(m, out_dir);
  return m;
}

DatasetConfig dataset_config_from_text(std::string_view text, std::string_view source) {
  DatasetConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string(source) + ": expected an object");
    static const std::set<std::string> known{
        "num_scenarios", "min_devices", "max_devices", "switch_fraction", "min_flows",
        "max_flows", "min_utilization", "max_utilization", "mb_only_fraction", "min_burst",
        "max_burst", "packet_size_choices_bits", "bandwidth_choices_bps", "propagation_delay_s",
        "extra_link_probability", "duration_s", "capture_window_s", "buffer_packets", "drain_s",
        "validation_fraction", "test_fraction", "seed"};
    for (const auto& item : j.items()) {
      if (!known.count(item.key())) {
        throw Error(ErrorCode::InvalidConfig, std::string(source) + ": unknown key '" + item.key() + "'");
      }
    }
    read_opt(j, "num_scenarios", c.num_scenarios);
    read_opt(j, "min_devices", c.min_devices);
    read_opt(j, "max_devices", c.max_devices);
    read_opt(j, "switch_fraction", c.switch_fraction);
    read_opt(j, "min_flows", c.min_flows);
    read_opt(j, "max_flows", c.max_flows);
    read_opt(j, "min_utilization", c.min_utilization);
    read_opt(j, "max_utilization", c.max_utilization);
    read_opt(j, "mb_only_fraction", c.mb_only_fraction);
    read_opt(j, "min_burst", c.min_burst);
    read_opt(j, "max_burst", c.max_burst);
    read_opt(j, "packet_size_choices_bits", c.packet_size_choices_bits);
    read_opt(j, "bandwidth_choices_bps", c.topology.bandwidth_choices_bps);
    read_opt(j, "propagation_delay_s", c.topology.propagation_delay_s);
    read_opt(j, "extra_link_probability", c.topology.extra_link_probability);
    read_opt(j, "duration_s", c.sim.duration_s);
    read_opt(j, "capture_window_s", c.sim.capture_window_s);
    read_opt(j, "buffer_packets", c.sim.buffer_packets);
    read_opt(j, "drain_s", c.sim.drain_s);
    read_opt(j, "validation_fraction", c.validation_fraction);
    read_opt(j, "test_fraction", c.test_fraction);
    read_opt(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(source) + ": " + e.what());
  }
  c.validate();
  return c;
}

DatasetConfig load_dataset_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_config_from_text(buf.str(), path.string());
}

std::string dataset_config_to_text(const DatasetConfig& c) {
  const json j = {{"num_scenarios", c.num_scenarios},
                  {"min_devices", c.min_devices},
                  {"max_devices", c.max_devices},
                  {"switch_fraction", c.switch_fraction},
                  {"min_flows", c.min_flows},
                  {"max_flows", c.max_flows},
                  {"min_utilization", c.min_utilization},
                  {"max_utilization", c.max_utilization},
                  {"mb_only_fraction", c.mb_only_fraction},
                  {"min_burst", c.min_burst},
                  {"max_burst", c.max_burst},
                  {"packet_size_choices_bits", c.packet_size_choices_bits},
                  {"bandwidth_choices_bps", c.topology.bandwidth_choices_bps},
                  {"propagation_delay_s", c.topology.propagation_delay_s},
                  {"extra_link_probability", c.topology.extra_link_probability},
                  {"duration_s", c.sim.duration_s},
                  {"capture_window_s", c.sim.capture_window_s},
                  {"buffer_packets", c.sim.buffer_packets},
                  {"drain_s", c.sim.drain_s},
                  {"validation_fraction", c.validation_fraction},
                  {"test_fraction", c.test_fraction},
                  {"seed", c.seed}};
  return j.dump(2) + "\n";
}

}  // namespace netdelay
