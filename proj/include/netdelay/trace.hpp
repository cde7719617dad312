#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netdelay/scenario.hpp"

namespace netdelay {

/// A captured packet; the timestamp is relative to the start of the capture
/// window.
struct PacketRecord {
  double timestamp_s = 0.0;
  double size_bits = 0.0;
};

/// Trims to the first second and counts packets per 1 ms bin.
std::vector<PacketBin> bin_packets(std::span<const PacketRecord> packets, double packet_size_bits);

enum class Feature : std::uint8_t {
  LinkBandwidth,
  FlowAvgLoad,
  FlowNumPackets,
  FlowPacketSize,
  BinCount,
  BinBits,
};
inline constexpr std::size_t kFeatureCount = 6;

std::string_view feature_name(Feature feature);
Feature feature_from_name(std::string_view name);

struct FeatureRange {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const FeatureRange&) const = default;
};

/// Min-max statistics fitted on the training split only.
struct NormStats {
  std::array<FeatureRange, kFeatureCount> ranges{};

  const FeatureRange& operator[](Feature f) const { return ranges[static_cast<std::size_t>(f)]; }
  FeatureRange& operator[](Feature f) { return ranges[static_cast<std::size_t>(f)]; }

  bool operator==(const NormStats&) const = default;
};

NormStats fit_normalization(std::span<const NetworkScenario> training_scenarios);

/// Maps `value` to [0, 1]; degenerate ranges map to 0 and out-of-range
/// values are clamped.
double apply_normalization(double value, Feature feature, const NormStats& stats);

void save_scenario(const NetworkScenario& scenario, const std::filesystem::path& path);
NetworkScenario load_scenario(const std::filesystem::path& path);

/// Text form used by save_scenario/load_scenario.
std::string scenario_to_text(const NetworkScenario& scenario);
NetworkScenario scenario_from_text(std::string_view text, std::string_view source = "<memory>");

enum class Split { Train, Validation, Test };
std::string_view to_string(Split split) noexcept;

/// manifest.json at the root of a dataset directory.
struct DatasetManifest {
  std::uint64_t generator_seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  const std::vector<std::string>& files(Split split) const;
  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr std::string_view kManifestName = "manifest.json";

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir);
DatasetManifest load_manifest(const std::filesystem::path& dir);

struct NamedScenario {
  std::string name;
  NetworkScenario scenario;
};

/// Loads every scenario of one split, in manifest order.
std::vector<NamedScenario> load_split(const std::filesystem::path& dir, Split split);

std::vector<NetworkScenario> scenarios_of(std::span<const NamedScenario> named);

}  // namespace netdelay
