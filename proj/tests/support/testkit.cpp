#include "testkit.hpp"

#include <algorithm>
#include <numeric>

namespace testkit {

using namespace netdelay;

double Rng::uniform(double lo, double hi) {
  double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::size_t Rng::index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

Vec numeric_gradient(const std::function<double(const Vec&)>& f, Vec x, double step) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double saved = x[i];
    x[i] = saved + step;
    double up = f(x);
    x[i] = saved - step;
    double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

Vec random_vec(Rng& rng, Eigen::Index n, double scale) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

std::vector<PacketBin> bins_from_counts(const std::vector<std::uint64_t>& per_bin,
                                        double packet_size_bits) {
  std::vector<PacketBin> bins(kBinCount);
  for (std::size_t k = 0; k < per_bin.size() && k < kBinCount; ++k) {
    bins[k].packet_count = per_bin[k];
    bins[k].bits = static_cast<double>(per_bin[k]) * packet_size_bits;
  }
  return bins;
}

Flow steady_flow(Id id, std::vector<Id> path, double packet_size_bits,
                 std::uint64_t packets_per_bin) {
  Flow f;
  f.id = std::move(id);
  f.path = std::move(path);
  f.packet_size_bits = packet_size_bits;
  f.packet_bins = bins_from_counts(std::vector<std::uint64_t>(kBinCount, packets_per_bin),
                                   packet_size_bits);
  f.num_packets = packets_per_bin * kBinCount;
  f.avg_load_bps = static_cast<double>(f.num_packets) * packet_size_bits;
  return f;
}

namespace {

struct Edge {
  Id port;
  std::size_t to;
};

}  // namespace

NetworkScenario random_scenario(Rng& rng, const RandomScenarioOptions& options) {
  std::size_t n = options.min_devices + rng.index(options.max_devices - options.min_devices + 1);
  std::vector<Device> devices(n);
  std::vector<std::vector<Edge>> out(n);
  std::vector<LinkPort> linkports;
  for (std::size_t i = 0; i < n; ++i) {
    devices[i].id = "n" + std::to_string(i);
    devices[i].kind = rng.chance(0.4) ? DeviceKind::Switch : DeviceKind::Router;
  }
  auto connect = [&](std::size_t u, std::size_t v) {
    for (const auto& e : out[u])
      if (e.to == v) return;
    for (auto [a, b] : {std::pair{u, v}, std::pair{v, u}}) {
      LinkPort lp;
      lp.id = devices[a].id + ">" + devices[b].id;
      lp.device_id = devices[a].id;
      lp.bandwidth_bps = rng.uniform(5e6, 5e7);
      lp.propagation_delay_s = rng.uniform(0.0, 1e-4);
      linkports.push_back(lp);
      devices[a].port_ids.push_back(lp.id);
      out[a].push_back({lp.id, b});
    }
  };
  for (std::size_t i = 1; i < n; ++i) connect(i, rng.index(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.chance(0.25)) connect(i, j);

  std::size_t n_flows = options.min_flows + rng.index(options.max_flows - options.min_flows + 1);
  const double sizes[] = {4000.0, 8000.0, 12000.0};
  std::vector<Flow> flows;
  for (std::size_t f = 0; f < n_flows; ++f) {
    Flow flow;
    flow.id = "f" + std::to_string(f);
    std::size_t at = rng.index(n);
    std::size_t want = 1 + rng.index(4);
    while (flow.path.size() < want) {
      std::vector<const Edge*> fresh;
      for (const auto& e : out[at])
        if (std::find(flow.path.begin(), flow.path.end(), e.port) == flow.path.end())
          fresh.push_back(&e);
      if (fresh.empty()) break;
      const Edge* e = fresh[rng.index(fresh.size())];
      flow.path.push_back(e->port);
      at = e->to;
    }
    flow.packet_size_bits = sizes[rng.index(3)];
    std::vector<std::uint64_t> counts(kBinCount);
    double density = rng.uniform(0.05, 0.6);
    std::uint64_t total = 0;
    for (auto& c : counts) {
      c = rng.chance(density) ? 1 + rng.index(4) : 0;
      total += c;
    }
    if (total == 0) counts[rng.index(kBinCount)] = total = 1;
    flow.packet_bins = bins_from_counts(counts, flow.packet_size_bits);
    flow.num_packets = total * (1 + rng.index(5));
    flow.avg_load_bps = static_cast<double>(flow.num_packets) * flow.packet_size_bits / 5.0;
    flow.distribution = rng.chance(0.5) ? Distribution::MB : Distribution::CBR;
    flows.push_back(std::move(flow));
  }
  std::optional<std::vector<double>> labels;
  if (options.labelled) {
    labels.emplace();
    for (std::size_t f = 0; f < n_flows; ++f) labels->push_back(rng.uniform(1e-4, 2e-2));
  }
  return build_scenario(devices, linkports, flows, labels);
}

namespace {

std::map<Id, Id> fresh_names(const std::vector<Id>& ids, const std::string& prefix, Rng& rng) {
  std::vector<std::size_t> perm(ids.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::map<Id, Id> names;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    names[ids[i]] = prefix + std::to_string(perm[i]);
  }
  return names;
}

template <typename T>
std::vector<Id> ids_of(const std::vector<T>& items) {
  std::vector<Id> ids;
  for (const auto& item : items) ids.push_back(item.id);
  return ids;
}

}  // namespace

Relabelled relabel(const NetworkScenario& scenario, Rng& rng) {
  auto dev = fresh_names(ids_of(scenario.devices()), "D", rng);
  auto port = fresh_names(ids_of(scenario.linkports()), "P", rng);
  auto flow = fresh_names(ids_of(scenario.flows()), "F", rng);

  std::vector<Device> devices = scenario.devices();
  for (auto& d : devices) {
    d.id = dev.at(d.id);
    for (auto& p : d.port_ids) p = port.at(p);
    std::shuffle(d.port_ids.begin(), d.port_ids.end(), rng.engine());
  }
  std::vector<LinkPort> linkports = scenario.linkports();
  for (auto& lp : linkports) {
    lp.id = port.at(lp.id);
    lp.device_id = dev.at(lp.device_id);
  }
  std::vector<Flow> flows = scenario.flows();
  for (auto& f : flows) {
    f.id = flow.at(f.id);
    for (auto& p : f.path) p = port.at(p);
  }
  std::optional<std::vector<double>> labels = scenario.labels();

  std::vector<std::size_t> order(flows.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<Flow> shuffled_flows;
  std::optional<std::vector<double>> shuffled_labels;
  if (labels) shuffled_labels.emplace();
  for (std::size_t i : order) {
    shuffled_flows.push_back(flows[i]);
    if (labels) shuffled_labels->push_back((*labels)[i]);
  }
  std::shuffle(devices.begin(), devices.end(), rng.engine());
  std::shuffle(linkports.begin(), linkports.end(), rng.engine());

  return {build_scenario(devices, linkports, shuffled_flows, shuffled_labels), flow};
}

LineNetwork line_network(double bandwidth_bps, double propagation_s) {
  LineNetwork net;
  net.devices = {
      {"a", DeviceKind::Router, {"a>b"}},
      {"b", DeviceKind::Router, {"b>a", "b>c"}},
      {"c", DeviceKind::Router, {"c>b"}},
  };
  for (auto [id, owner] : {std::pair{"a>b", "a"}, {"b>a", "b"}, {"b>c", "b"}, {"c>b", "c"}}) {
    net.linkports.push_back({id, owner, bandwidth_bps, propagation_s});
  }
  return net;
}

}  // namespace testkit
