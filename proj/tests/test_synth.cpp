#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "netdelay/error.hpp"
#include "netdelay/synth.hpp"
#include "netdelay/training.hpp"
#include "support/testkit.hpp"

using namespace netdelay;
namespace fs = std::filesystem;

namespace {

// Devices d0 - d1 - ... in a chain, all links at `bw`, propagation `prop`.
Topology chain(std::size_t n, double bw, double prop = 0.0) {
  Topology t;
  for (std::size_t i = 0; i < n; ++i) t.devices.push_back({"d" + std::to_string(i), DeviceKind::Router, {}});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (auto [a, b] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
      Id id = t.devices[a].id + "-" + t.devices[b].id;
      t.linkports.push_back({id, t.devices[a].id, bw, prop});
      t.devices[a].port_ids.push_back(id);
      t.peer[id] = t.devices[b].id;
    }
  }
  return t;
}

FlowSkeleton cbr_flow(Id id, std::vector<Id> path, double load, double size = 8000.0) {
  FlowSkeleton f;
  f.id = std::move(id);
  f.path = std::move(path);
  f.traffic.distribution = Distribution::CBR;
  f.traffic.avg_load_bps = load;
  f.traffic.packet_size_bits = size;
  return f;
}

// CBR stream with the first packet exactly at `phase`.
std::vector<PacketRecord> cbr_stream(double load, double size, double duration, double phase) {
  std::vector<PacketRecord> out;
  double gap = size / load;
  for (std::size_t k = 0;; ++k) {
    double t = phase + static_cast<double>(k) * gap;
    if (t >= duration) break;
    out.push_back({t, size});
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("netdelay_synth_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("gen_topology") {
  auto two = gen_topology(1, 2, 0.5);
  CHECK(two.devices.size() == 2);
  CHECK(two.linkports.size() == 2);
  CHECK(gen_topology(9, 7, 0.3).linkports == gen_topology(9, 7, 0.3).linkports);
  CHECK(gen_topology(9, 7, 0.3).devices == gen_topology(9, 7, 0.3).devices);
  for (std::size_t bad : {std::size_t{0}, std::size_t{1}, std::size_t{17}}) {
    try {
      gen_topology(1, bad, 0.5);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidSize);
    }
  }
}

TEST_CASE("property: generated topologies are connected and validate") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::size_t n = 2 + seed % 15;
    auto t = gen_topology(seed, n, 0.3);
    std::vector<Flow> flows;
    for (std::size_t d = 1; d < n; ++d) {
      auto path = shortest_path(t, t.devices[0].id, t.devices[d].id);
      REQUIRE_FALSE(path.empty());
      // Consecutive hops are adjacent: each hop leaves the device the previous one reached.
      Id at = t.devices[0].id;
      for (const Id& hop : path) {
        auto lp = std::find_if(t.linkports.begin(), t.linkports.end(),
                               [&](const LinkPort& l) { return l.id == hop; });
        REQUIRE(lp != t.linkports.end());
        CHECK(lp->device_id == at);
        at = t.peer.at(hop);
      }
      CHECK(at == t.devices[d].id);
      flows.push_back(testkit::steady_flow("f" + std::to_string(d), path));
    }
    CHECK_NOTHROW(build_scenario(t.devices, t.linkports, flows));
  }
}

TEST_CASE("gen_flow_packets: CBR and Multi-Burst arithmetic") {
  TrafficSpec cbr;
  cbr.avg_load_bps = 8e5;
  cbr.packet_size_bits = 8000;
  auto pkts = gen_flow_packets(cbr, 1.0, 3);
  REQUIRE(pkts.size() == 100);
  for (std::size_t i = 1; i < pkts.size(); ++i) {
    CHECK(pkts[i].timestamp_s - pkts[i - 1].timestamp_s == doctest::Approx(0.01));
  }
  CHECK(pkts[0].timestamp_s < 0.01);

  TrafficSpec mb = cbr;
  mb.distribution = Distribution::MB;
  mb.burst_length_packets = 10;
  mb.line_rate_bps = 1e7;
  auto bursts = gen_flow_packets(mb, 1.0, 4);
  REQUIRE(bursts.size() == 100);
  std::size_t starts = 1;
  for (std::size_t i = 1; i < bursts.size(); ++i) {
    double gap = bursts[i].timestamp_s - bursts[i - 1].timestamp_s;
    if (i % 10 == 0) {
      ++starts;
      CHECK(gap > 0.0008 + 1e-12);
    } else {
      CHECK(gap == doctest::Approx(0.0008));
    }
  }
  CHECK(starts == 10);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& spec : {cbr, mb}) {
      auto p = gen_flow_packets(spec, 10.0, seed);
      double rate = static_cast<double>(p.size()) * spec.packet_size_bits / 10.0;
      CHECK(std::abs(rate - spec.avg_load_bps) <= 0.01 * spec.avg_load_bps);
    }
  }
}

TEST_CASE("DES: uncontended flows see exactly the store-and-forward delay") {
  SimConfig sim;
  ScenarioSkeleton one{chain(2, 1e7), {cbr_flow("f", {"d0-d1"}, 8e5)}};
  auto out = simulate(one, {cbr_stream(8e5, 8000, 10.0, 0.0013)}, sim);
  CHECK(std::abs(out.scenario.labels()->at(0) - 0.0008) < 1e-12);

  ScenarioSkeleton two{chain(3, 1e7), {cbr_flow("f", {"d0-d1", "d1-d2"}, 8e5)}};
  out = simulate(two, {cbr_stream(8e5, 8000, 10.0, 0.0013)}, sim);
  CHECK(std::abs(out.scenario.labels()->at(0) - 0.0016) < 1e-12);

  ScenarioSkeleton prop{chain(3, 1e7, 5e-5), {cbr_flow("f", {"d0-d1", "d1-d2"}, 8e5)}};
  out = simulate(prop, {cbr_stream(8e5, 8000, 10.0, 0.0013)}, sim);
  CHECK(std::abs(out.scenario.labels()->at(0) - 0.0017) < 1e-12);
  CHECK(out.scenario.labels()->at(0) == doctest::Approx(baseline_no_queuing(out.scenario)[0]));
}

TEST_CASE("DES: synchronized flows on one hop (pinned fixture)") {
  // Both flows send at the same instants; the first-listed flow is served
  // first each time, so it never waits and the other waits one full
  // transmission time (0.0008 s) per packet.
  SimConfig sim;
  sim.record_port_log = true;
  ScenarioSkeleton s{chain(2, 1e7), {cbr_flow("a", {"d0-d1"}, 4e6), cbr_flow("b", {"d0-d1"}, 4e6)}};
  auto stream = cbr_stream(4e6, 8000, 10.0, 0.0);
  auto out = simulate(s, {stream, stream}, sim);
  const auto& labels = *out.scenario.labels();
  CHECK(std::abs(labels[0] - 0.0008) < 1e-12);
  CHECK(std::abs(labels[1] - 0.0016) < 1e-12);
  CHECK((labels[0] + labels[1]) / 2.0 > 0.0008);

  // First five completions on the shared port, by hand.
  const auto& log = out.port_log[0];
  REQUIRE(log.size() >= 5);
  const double expected[] = {0.0008, 0.0016, 0.0028, 0.0036, 0.0048};
  for (int i = 0; i < 5; ++i) CHECK(log[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(out.fifo_ok);
}

TEST_CASE("DES: drop-tail buffer counts the packet in service") {
  SimConfig sim;
  sim.buffer_packets = 2;
  // a and b send together every 8 ms; c sends every 4 ms, so every other c
  // packet finds one packet in service and one waiting, and is dropped.
  ScenarioSkeleton s{chain(2, 1e7),
                     {cbr_flow("a", {"d0-d1"}, 1e6), cbr_flow("b", {"d0-d1"}, 1e6),
                      cbr_flow("c", {"d0-d1"}, 2e6)}};
  auto slow = cbr_stream(1e6, 8000, 10.0, 0.0);
  auto fast = cbr_stream(2e6, 8000, 10.0, 0.0);
  auto out = simulate(s, {slow, slow, fast}, sim);
  CHECK(out.counters[0].dropped == 0);
  CHECK(out.counters[1].dropped == 0);
  CHECK(out.counters[2].dropped == fast.size() / 2);
  CHECK(out.counters[2].delivered == fast.size() / 2);
  CHECK(std::abs(out.scenario.labels()->at(2) - 0.0008) < 1e-12);
}

TEST_CASE("DES: a flow with nothing delivered in the capture window is an error") {
  SimConfig sim;
  ScenarioSkeleton s{chain(2, 1e7), {cbr_flow("early", {"d0-d1"}, 8e5)}};
  try {
    simulate(s, {cbr_stream(8e5, 8000, 4.0, 0.0)}, sim);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDeliveredPackets);
  }
}

TEST_CASE("DES: single flows under 50% utilization never queue") {
  testkit::Rng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    auto topo = gen_topology(rng.bits(), 2 + rng.index(6), 0.3);
    Id src = topo.devices[rng.index(topo.devices.size())].id;
    Id dst = src;
    while (dst == src) dst = topo.devices[rng.index(topo.devices.size())].id;
    auto path = shortest_path(topo, src, dst);
    double min_bw = 1e300;
    for (const auto& lp : topo.linkports)
      if (std::find(path.begin(), path.end(), lp.id) != path.end()) min_bw = std::min(min_bw, lp.bandwidth_bps);
    auto f = cbr_flow("f", path, rng.uniform(0.05, 0.49) * min_bw, 4000.0 * (1 + rng.index(3)));
    ScenarioSkeleton s{topo, {f}};
    auto stream = gen_flow_packets(f.traffic, 10.0, rng.bits());
    auto out = simulate(s, {stream}, SimConfig{});
    CHECK(out.scenario.labels()->at(0) == doctest::Approx(baseline_no_queuing(out.scenario)[0]).epsilon(1e-12));
  }
}

TEST_CASE("property: conservation, FIFO order and the delay lower bound") {
  testkit::Rng rng(52);
  DatasetConfig cfg;
  for (int trial = 0; trial < 60; ++trial) {
    auto topo = gen_topology(rng.bits(), 2 + rng.index(7), 0.3);
    ScenarioSkeleton s{topo, {}};
    std::vector<std::vector<PacketRecord>> streams;
    std::size_t n_flows = 1 + rng.index(8);
    for (std::size_t i = 0; i < n_flows; ++i) {
      Id src = topo.devices[rng.index(topo.devices.size())].id;
      Id dst = src;
      while (dst == src) dst = topo.devices[rng.index(topo.devices.size())].id;
      FlowSkeleton f = cbr_flow("f" + std::to_string(i), shortest_path(topo, src, dst),
                                rng.uniform(1e6, 1.5e7), 4000.0 * (1 + rng.index(3)));
      if (rng.chance(0.5)) {
        f.traffic.distribution = Distribution::MB;
        f.traffic.burst_length_packets = 1 + rng.index(40);
        f.traffic.line_rate_bps = 4e7;
      }
      streams.push_back(gen_flow_packets(f.traffic, 10.0, rng.bits()));
      s.flows.push_back(f);
    }
    SimConfig sim;
    sim.buffer_packets = 1 + rng.index(64);
    sim.drain_s = rng.chance(0.3) ? 0.0 : 5.0;
    SimOutcome out;
    try {
      out = simulate(s, streams, sim);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoDeliveredPackets);
      continue;
    }
    CHECK(out.fifo_ok);
    for (std::size_t f = 0; f < n_flows; ++f) {
      const auto& c = out.counters[f];
      CHECK(c.delivered + c.dropped + c.in_flight == c.injected);
      CHECK(c.injected == streams[f].size());
      double bound = baseline_no_queuing(out.scenario)[out.scenario.flow_index(c.flow_id)];
      CHECK(c.min_delay_s >= bound - 1e-12);
      CHECK(c.mean_delay_s >= c.min_delay_s - 1e-12);
    }
  }
}

TEST_CASE("dataset generation: files, manifest, determinism, pair rules") {
  DatasetConfig cfg;
  cfg.num_scenarios = 10;
  cfg.seed = 5;
  cfg.sim.duration_s = 6.0;
  cfg.sim.capture_window_s = 2.0;
  auto a = scratch_dir("a"), b = scratch_dir("b");
  auto m = gen_dataset(cfg, a, 1);
  auto m2 = gen_dataset(cfg, b, 3);
  CHECK(m == m2);
  CHECK(m.train.size() + m.validation.size() + m.test.size() == 10);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CHECK(read_file(entry.path()) == read_file(b / entry.path().filename()));
  }
  CHECK(files == 11);

  for (const auto& split : {Split::Train, Split::Validation, Split::Test}) {
    for (const auto& named : load_split(a, split)) {
      const auto& s = named.scenario;
      // Flows between the same endpoints share the path; at most one per distribution.
      std::map<std::pair<Id, Id>, std::vector<const Flow*>> by_pair;
      for (const auto& f : s.flows()) {
        Id src = s.linkports()[s.linkport_index(f.path.front())].device_id;
        by_pair[{src, f.path.back()}].push_back(&f);
      }
      for (const auto& [_, group] : by_pair) {
        CHECK(group.size() <= 2);
        if (group.size() == 2) {
          CHECK(group[0]->path == group[1]->path);
          CHECK(group[0]->distribution != group[1]->distribution);
        }
      }
    }
  }

  DatasetConfig mb = cfg;
  mb.mb_only_fraction = 1.0;
  for (std::size_t i = 0; i < 5; ++i) {
    auto s = gen_scenario(mb, i);
    std::set<std::pair<Id, Id>> pairs;
    for (const auto& f : s.flows()) {
      CHECK(f.distribution == Distribution::MB);
      Id src = s.linkports()[s.linkport_index(f.path.front())].device_id;
      CHECK(pairs.insert({src, f.path.back()}).second);
    }
  }
}

TEST_CASE("dataset config parsing") {
  auto c = dataset_config_from_text(R"({"num_scenarios": 3, "seed": 9, "max_devices": 5})");
  CHECK(c.num_scenarios == 3);
  CHECK(c.seed == 9);
  CHECK(c.max_devices == 5);
  CHECK(c.min_flows == DatasetConfig{}.min_flows);
  auto again = dataset_config_from_text(dataset_config_to_text(c));
  CHECK(dataset_config_to_text(again) == dataset_config_to_text(c));

  auto code_of = [](std::string_view text) {
    try {
      dataset_config_from_text(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code_of(R"({"num_scenarios": 0})") == ErrorCode::InvalidConfig);
  CHECK(code_of(R"({"min_devices": 9, "max_devices": 4})") == ErrorCode::InvalidConfig);
  CHECK(code_of(R"({"num_scenaros": 4})") == ErrorCode::InvalidConfig);
  CHECK(code_of(R"({"num_scenarios": "many"})") == ErrorCode::ParseError);
  CHECK(code_of("{") == ErrorCode::ParseError);
}
