#include "netdelay/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netdelay/error.hpp"

namespace netdelay {

using nlohmann::json;

std::vector<PacketBin> bin_packets(std::span<const PacketRecord> packets, double packet_size_bits) {
  std::vector<PacketBin> bins(kBinCount);
  const double window = static_cast<double>(kBinCount) * kBinWidthSeconds;
  for (const PacketRecord& p : packets) {
    if (!(p.timestamp_s >= 0.0)) {
      throw Error(ErrorCode::NegativeTimestamp, "packet timestamp " + std::to_string(p.timestamp_s));
    }
    if (p.timestamp_s >= window) continue;
    auto k = static_cast<std::size_t>(std::floor(p.timestamp_s / kBinWidthSeconds));
    k = std::min(k, kBinCount - 1);
    ++bins[k].packet_count;
  }
  for (PacketBin& bin : bins) bin.bits = static_cast<double>(bin.packet_count) * packet_size_bits;
  return bins;
}

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "link_bandwidth", "flow_avg_load", "flow_num_packets",
    "flow_packet_size", "bin_count", "bin_bits"};

void widen(FeatureRange& range, double v, bool& first) {
  if (first) {
    range = {v, v};
    first = false;
  } else {
    range.min = std::min(range.min, v);
    range.max = std::max(range.max, v);
  }
}

}  // namespace

std::string_view feature_name(Feature feature) {
  const auto i = static_cast<std::size_t>(feature);
  if (i >= kFeatureCount) throw Error(ErrorCode::UnknownFeature, std::to_string(i));
  return kFeatureNames[i];
}

Feature feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  throw Error(ErrorCode::UnknownFeature, std::string(name));
}

NormStats fit_normalization(std::span<const NetworkScenario> training_scenarios) {
  NormStats stats;
  std::array<bool, kFeatureCount> first{};
  first.fill(true);
  auto add = [&](Feature f, double v) {
    widen(stats[f], v, first[static_cast<std::size_t>(f)]);
  };
  bool any_flow = false;
  for (const NetworkScenario& s : training_scenarios) {
    for (const LinkPort& lp : s.linkports()) add(Feature::LinkBandwidth, lp.bandwidth_bps);
    for (const Flow& flow : s.flows()) {
      any_flow = true;
      add(Feature::FlowAvgLoad, flow.avg_load_bps);
      add(Feature::FlowNumPackets, static_cast<double>(flow.num_packets));
      add(Feature::FlowPacketSize, flow.packet_size_bits);
      for (const PacketBin& bin : flow.packet_bins) {
        add(Feature::BinCount, static_cast<double>(bin.packet_count));
        add(Feature::BinBits, bin.bits);
      }
    }
  }
  if (!any_flow) throw Error(ErrorCode::EmptyDataset, "no flows in the training split");
  return stats;
}

double apply_normalization(double value, Feature feature, const NormStats& stats) {
  const auto i = static_cast<std::size_t>(feature);
  if (i >= kFeatureCount) throw Error(ErrorCode::UnknownFeature, std::to_string(i));
  const FeatureRange& r = stats.ranges[i];
  if (!(r.max > r.min)) return 0.0;
  return std::clamp((value - r.min) / (r.max - r.min), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

struct Reader {
  std::string_view source;

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw Error(ErrorCode::ParseError, std::string(source) + ": " + where + ": " + what);
  }

  const json& field(const json& obj, const char* key, const std::string& where) const {
    if (!obj.is_object()) fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
  }

  double real(const json& obj, const char* key, const std::string& where) const {
    const json& v = field(obj, key, where);
    if (!v.is_number()) fail(where + "/" + key, "expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const json& v, const std::string& where) const {
    if (!v.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const json& obj, const char* key, const std::string& where) const {
    const json& v = field(obj, key, where);
    if (!v.is_string()) fail(where + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& obj, const char* key, const std::string& where) const {
    const json& v = field(obj, key, where);
    if (!v.is_array()) fail(where + "/" + key, "expected an array");
    return v;
  }

  std::vector<Id> ids(const json& obj, const char* key, const std::string& where) const {
    const json& arr = array(obj, key, where);
    std::vector<Id> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) fail(where + "/" + key + "/" + std::to_string(i), "expected a string");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }
};

json scenario_to_json(const NetworkScenario& s) {
  json devices = json::array();
  for (const Device& d : s.devices()) {
    devices.push_back({{"id", d.id}, {"kind", to_string(d.kind)}, {"port_ids", d.port_ids}});
  }
  json linkports = json::array();
  for (const LinkPort& lp : s.linkports()) {
    linkports.push_back({{"id", lp.id},
                         {"device_id", lp.device_id},
                         {"bandwidth_bps", lp.bandwidth_bps},
                         {"propagation_delay_s", lp.propagation_delay_s}});
  }
  json flows = json::array();
  for (const Flow& f : s.flows()) {
    std::vector<std::uint64_t> counts;
    std::vector<double> bits;
    counts.reserve(f.packet_bins.size());
    bits.reserve(f.packet_bins.size());
    for (const PacketBin& b : f.packet_bins) {
      counts.push_back(b.packet_count);
      bits.push_back(b.bits);
    }
    flows.push_back({{"id", f.id},
                     {"path", f.path},
                     {"avg_load_bps", f.avg_load_bps},
                     {"num_packets", f.num_packets},
                     {"packet_size_bits", f.packet_size_bits},
                     {"distribution", to_string(f.distribution)},
                     {"packet_bins", {{"packet_count", counts}, {"bits", bits}}}});
  }
  json root = {{"format", "netdelay-scenario/1"},
               {"units", {{"delay", "s"}, {"rate", "bit/s"}, {"size", "bit"}}},
               {"devices", devices},
               {"linkports", linkports},
               {"flows", flows}};
  root["labels"] = s.labels() ? json(*s.labels()) : json(nullptr);
  return root;
}

NetworkScenario scenario_from_json(const json& root, const Reader& r) {
  if (r.text(root, "format", "") != "netdelay-scenario/1") r.fail("/format", "unsupported format");

  std::vector<Device> devices;
  const json& jd = r.array(root, "devices", "");
  for (std::size_t i = 0; i < jd.size(); ++i) {
    const std::string where = "/devices/" + std::to_string(i);
    Device d;
    d.id = r.text(jd[i], "id", where);
    const std::string kind = r.text(jd[i], "kind", where);
    if (kind == "Router") {
      d.kind = DeviceKind::Router;
    } else if (kind == "Switch") {
      d.kind = DeviceKind::Switch;
    } else {
      r.fail(where + "/kind", "unknown device kind '" + kind + "'");
    }
    d.port_ids = r.ids(jd[i], "port_ids", where);
    devices.push_back(std::move(d));
  }

  std::vector<LinkPort> linkports;
  const json& jl = r.array(root, "linkports", "");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string where = "/linkports/" + std::to_string(i);
    LinkPort lp;
    lp.id = r.text(jl[i], "id", where);
    lp.device_id = r.text(jl[i], "device_id", where);
    lp.bandwidth_bps = r.real(jl[i], "bandwidth_bps", where);
    lp.propagation_delay_s = r.real(jl[i], "propagation_delay_s", where);
    linkports.push_back(std::move(lp));
  }

  std::vector<Flow> flows;
  const json& jf = r.array(root, "flows", "");
  for (std::size_t i = 0; i < jf.size(); ++i) {
    const std::string where = "/flows/" + std::to_string(i);
    Flow f;
    f.id = r.text(jf[i], "id", where);
    f.path = r.ids(jf[i], "path", where);
    f.avg_load_bps = r.real(jf[i], "avg_load_bps", where);
    f.num_packets = r.count(r.field(jf[i], "num_packets", where), where + "/num_packets");
    f.packet_size_bits = r.real(jf[i], "packet_size_bits", where);
    const std::string dist = r.text(jf[i], "distribution", where);
    if (dist == "CBR") {
      f.distribution = Distribution::CBR;
    } else if (dist == "MB") {
      f.distribution = Distribution::MB;
    } else {
      r.fail(where + "/distribution", "unknown distribution '" + dist + "'");
    }
    const json& bins = r.field(jf[i], "packet_bins", where);
    const json& counts = r.array(bins, "packet_count", where + "/packet_bins");
    const json& bits = r.array(bins, "bits", where + "/packet_bins");
    if (counts.size() != bits.size()) {
      r.fail(where + "/packet_bins", "packet_count and bits lengths differ");
    }
    f.packet_bins.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const std::string at = where + "/packet_bins/" + std::to_string(k);
      f.packet_bins[k].packet_count = r.count(counts[k], at + "/packet_count");
      if (!bits[k].is_number()) r.fail(at + "/bits", "expected a number");
      f.packet_bins[k].bits = bits[k].get<double>();
    }
    flows.push_back(std::move(f));
  }

  std::optional<std::vector<double>> labels;
  auto jlabels = root.find("labels");
  if (jlabels != root.end() && !jlabels->is_null()) {
    if (!jlabels->is_array()) r.fail("/labels", "expected an array or null");
    std::vector<double> values;
    for (std::size_t i = 0; i < jlabels->size(); ++i) {
      if (!(*jlabels)[i].is_number()) r.fail("/labels/" + std::to_string(i), "expected a number");
      values.push_back((*jlabels)[i].get<double>());
    }
    labels = std::move(values);
  }
  return build_scenario(std::move(devices), std::move(linkports), std::move(flows),
                        std::move(labels));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for '" + path.string() + "'");
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann's message carries the line and column.
    throw Error(ErrorCode::ParseError, std::string(source) + ": " + e.what());
  }
}

}  // namespace

std::string scenario_to_text(const NetworkScenario& scenario) {
  return scenario_to_json(scenario).dump(1) + "\n";
}

NetworkScenario scenario_from_text(std::string_view text, std::string_view source) {
  return scenario_from_json(parse_json(text, source), Reader{source});
}

void save_scenario(const NetworkScenario& scenario, const std::filesystem::path& path) {
  write_file(path, scenario_to_text(scenario));
}

NetworkScenario load_scenario(const std::filesystem::path& path) {
  const std::string source = path.string();
  return scenario_from_text(read_file(path), source);
}

// ---------------------------------------------------------------------------
// Dataset manifest

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

const std::vector<std::string>& DatasetManifest::files(Split split) const {
  switch (split) {
    case Split::Train: return train;
    case Split::Validation: return validation;
    case Split::Test: break;
  }
  return test;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir) {
  json root = {{"format", "netdelay-dataset/1"},
               {"generator_seed", manifest.generator_seed},
               {"splits",
                {{"train", manifest.train},
                 {"validation", manifest.validation},
                 {"test", manifest.test}}}};
  write_file(dir / kManifestName, root.dump(1) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  const std::string source = path.string();
  const json root = parse_json(read_file(path), source);
  Reader r{source};
  if (r.text(root, "format", "") != "netdelay-dataset/1") r.fail("/format", "unsupported format");
  DatasetManifest m;
  m.generator_seed = r.count(r.field(root, "generator_seed", ""), "/generator_seed");
  const json& splits = r.field(root, "splits", "");
  m.train = r.ids(splits, "train", "/splits");
  m.validation = r.ids(splits, "validation", "/splits");
  m.test = r.ids(splits, "test", "/splits");
  return m;
}

std::vector<NamedScenario> load_split(const std::filesystem::path& dir, Split split) {
  const DatasetManifest manifest = load_manifest(dir);
  std::vector<NamedScenario> out;
  for (const std::string& name : manifest.files(split)) {
    out.push_back(NamedScenario{name, load_scenario(dir / name)});
  }
  return out;
}

std::vector<NetworkScenario> scenarios_of(std::span<const NamedScenario> named) {
  std::vector<NetworkScenario> out;
  out.reserve(named.size());
  for (const NamedScenario& n : named) out.push_back(n.scenario);
  return out;
}

}  // namespace netdelay
