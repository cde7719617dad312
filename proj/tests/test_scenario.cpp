#include <doctest.h>

#include "netdelay/error.hpp"
#include "netdelay/scenario.hpp"
#include "support/testkit.hpp"

using namespace netdelay;

namespace {

ErrorCode build_error(std::vector<Device> d, std::vector<LinkPort> l, std::vector<Flow> f,
                      std::optional<std::vector<double>> labels = std::nullopt) {
  try {
    build_scenario(std::move(d), std::move(l), std::move(f), std::move(labels));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected build_scenario to throw");
  return ErrorCode::InvalidConfig;
}

// f0: [a>b, b>c], f1: [b>c]
NetworkScenario two_flows() {
  auto net = testkit::line_network();
  return build_scenario(net.devices, net.linkports,
                        {testkit::steady_flow("f0", {"a>b", "b>c"}),
                         testkit::steady_flow("f1", {"b>c"})},
                        std::vector<double>{0.002, 0.001});
}

}  // namespace

TEST_CASE("minimal scenario builds") {
  auto s = build_scenario({{"d0", DeviceKind::Router, {"p0"}}}, {{"p0", "d0", 1e6, 0.0}},
                          {testkit::steady_flow("f", {"p0"})});
  CHECK(s.devices().size() == 1);
  CHECK(s.flows().size() == 1);
  CHECK_FALSE(s.has_labels());
}

TEST_CASE("build_scenario rejects malformed input") {
  std::vector<Device> dev{{"d0", DeviceKind::Router, {"p0"}}};
  std::vector<LinkPort> lp{{"p0", "d0", 1e6, 0.0}};

  CHECK(build_error(dev, lp, {testkit::steady_flow("f", {"p0", "p0"})}) ==
        ErrorCode::DuplicatePortInPath);
  CHECK(build_error(dev, lp, {testkit::steady_flow("f", {"p9"})}) == ErrorCode::DanglingReference);
  CHECK(build_error(dev, lp, {testkit::steady_flow("f", {})}) == ErrorCode::EmptyPath);
  CHECK(build_error(dev, lp, {testkit::steady_flow("f", {"p0"})}, std::vector<double>{0.0}) ==
        ErrorCode::NonPositiveLabel);
  CHECK(build_error(dev, lp, {testkit::steady_flow("f", {"p0"})}, std::vector<double>{-1.0}) ==
        ErrorCode::NonPositiveLabel);
  CHECK(build_error(dev, {{"p0", "d0", 0.0, 0.0}}, {testkit::steady_flow("f", {"p0"})}) ==
        ErrorCode::InvalidField);
  CHECK(build_error(dev, {{"p0", "d0", 1e6, -1e-3}}, {testkit::steady_flow("f", {"p0"})}) ==
        ErrorCode::InvalidField);
  CHECK(build_error(dev, {{"p0", "d7", 1e6, 0.0}}, {testkit::steady_flow("f", {"p0"})}) ==
        ErrorCode::DanglingReference);
  CHECK(build_error({{"d0", DeviceKind::Router, {}}}, lp, {testkit::steady_flow("f", {"p0"})}) ==
        ErrorCode::InvalidField);
  CHECK(build_error({{"d0", DeviceKind::Router, {"p0", "p0"}}}, lp,
                    {testkit::steady_flow("f", {"p0"})}) == ErrorCode::DuplicateId);
  CHECK(build_error(dev, lp,
                    {testkit::steady_flow("f", {"p0"}), testkit::steady_flow("f", {"p0"})}) ==
        ErrorCode::DuplicateId);

  Flow bad_bits = testkit::steady_flow("f", {"p0"});
  bad_bits.packet_bins[3].bits += 1.0;
  CHECK(build_error(dev, lp, {bad_bits}) == ErrorCode::InvalidField);
  Flow short_bins = testkit::steady_flow("f", {"p0"});
  short_bins.packet_bins.pop_back();
  CHECK(build_error(dev, lp, {short_bins}) == ErrorCode::InvalidField);
}

TEST_CASE("flows_through lists crossings sorted by flow and position") {
  auto s = two_flows();
  CHECK(flows_through(s, "b>c") == std::vector<FlowCrossing>{{"f0", 1}, {"f1", 0}});
  CHECK(flows_through(s, "a>b") == std::vector<FlowCrossing>{{"f0", 0}});
  CHECK(flows_through(s, "c>b").empty());
  CHECK_THROWS_AS(flows_through(s, "zz"), Error);
}

TEST_CASE("ports_of_device keeps stored order") {
  auto s = two_flows();
  CHECK(ports_of_device(s, "b") == std::vector<Id>{"b>a", "b>c"});
  CHECK(ports_of_device(s, "a") == std::vector<Id>{"a>b"});
  try {
    ports_of_device(s, "q");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownDevice);
  }
}

TEST_CASE("path_hops pairs each linkport with its owner") {
  auto s = two_flows();
  CHECK(path_hops(s, "f0") == std::vector<Hop>{{"a>b", "a"}, {"b>c", "b"}});
  CHECK(path_hops(s, "f1") == std::vector<Hop>{{"b>c", "b"}});
  try {
    path_hops(s, "nope");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFlow);
  }
}

TEST_CASE("labels follow their flows through sorting") {
  auto net = testkit::line_network();
  auto s = build_scenario(net.devices, net.linkports,
                          {testkit::steady_flow("z", {"a>b"}), testkit::steady_flow("m", {"b>c"})},
                          std::vector<double>{0.5, 0.25});
  CHECK(s.flows()[0].id == "m");
  CHECK(s.labels()->at(0) == 0.25);
  CHECK(s.labels()->at(1) == 0.5);
}

TEST_CASE("property: flows_through and path_hops agree") {
  testkit::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = testkit::random_scenario(rng);
    for (const auto& lp : s.linkports()) {
      for (const auto& c : flows_through(s, lp.id)) {
        CHECK(path_hops(s, c.flow_id).at(c.position).linkport_id == lp.id);
      }
    }
    for (const auto& f : s.flows()) {
      auto hops = path_hops(s, f.id);
      for (std::size_t p = 0; p < hops.size(); ++p) {
        auto through = flows_through(s, hops[p].linkport_id);
        CHECK(std::find(through.begin(), through.end(), FlowCrossing{f.id, p}) != through.end());
        CHECK(s.linkports()[s.linkport_index(hops[p].linkport_id)].device_id == hops[p].device_id);
      }
    }
  }
}

TEST_CASE("property: validation either succeeds fully or throws a typed error") {
  testkit::Rng rng(12);
  int rejected = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto s = testkit::random_scenario(rng);
    std::vector<Device> devices = s.devices();
    std::vector<LinkPort> linkports = s.linkports();
    std::vector<Flow> flows = s.flows();
    // One random corruption per trial.
    switch (rng.index(5)) {
      case 0: flows[rng.index(flows.size())].path.push_back("missing"); break;
      case 1: {
        auto& f = flows[rng.index(flows.size())];
        f.path.push_back(f.path.front());
        break;
      }
      case 2: linkports[rng.index(linkports.size())].bandwidth_bps = -1.0; break;
      case 3: devices[rng.index(devices.size())].port_ids.clear(); break;
      default: break;
    }
    try {
      auto rebuilt = build_scenario(devices, linkports, flows, s.labels());
      for (const auto& f : rebuilt.flows()) {
        CHECK_FALSE(f.path.empty());
        for (const auto& p : f.path) CHECK_NOTHROW(rebuilt.linkport_index(p));
      }
    } catch (const Error& e) {
      ++rejected;
      CHECK(std::string(e.what()).find(to_string(e.code())) == 0);
    }
  }
  CHECK(rejected > 100);
}
