#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "netdelay/tape.hpp"
#include "netdelay/tensor.hpp"

namespace netdelay {

/// Architecture and message-passing settings. Defaults follow the reference
/// hyperparameters: 64-wide flow and link-port embeddings, 16-wide devices,
/// at most 40 iterations, 5% / 95% convergence rule.
struct ModelConfig {
  std::size_t flow_dim = 64;
  std::size_t linkport_dim = 64;
  std::size_t device_dim = 16;
  std::size_t packet_dim = 64;
  std::size_t mlp_hidden_layers = 2;
  std::size_t t_max = 40;
  double convergence_threshold = 0.05;  // <= 0 disables the early stop
  double convergence_quantile = 0.95;
  /// Seconds per unit of the readout's softplus output.
  double queue_delay_unit_s = 1e-3;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Input widths fixed by the feature set.
inline constexpr std::size_t kFlowScalarFeatures = 3;  // load, packet size, packet count
inline constexpr std::size_t kBinFeatures = 2;         // packets, bits
inline constexpr std::size_t kLinkFeatures = 1;        // bandwidth

/// Every learnable tensor of the delay model, in a fixed creation order.
class ModelParams {
 public:
  ModelParams() = default;

  /// Zero-filled parameters laid out for `config`.
  static ModelParams zeros(const ModelConfig& config);

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  std::vector<Tensor>& tensors() noexcept { return tensors_; }
  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t scalar_count() const;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  void add(std::string name, Tensor tensor);
  void fill(double v);

  bool operator==(const ModelParams& other) const {
    return names_ == other.names_ && tensors_ == other.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

/// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) via a seeded
/// mt19937_64; biases start at zero.
ModelParams init_params(std::uint64_t seed, const ModelConfig& config);

/// The model's learnable functions wired to parameter (and optionally
/// gradient) storage.
struct ModelWeights {
  MlpWeights flow_encoder;
  MlpWeights linkport_encoder_router;
  MlpWeights linkport_encoder_switch;
  MlpWeights device_encoder_router;
  MlpWeights device_encoder_switch;
  GruWeights packet_layer1;
  GruWeights packet_layer2;
  GruWeights flow_rnn;
  GruWeights linkport_update;
  GruWeights device_update;
  MlpWeights readout;
};

/// `grads`, when given, must have the same layout as `params`.
ModelWeights bind_weights(const ModelParams& params, ModelParams* grads = nullptr);

/// Binary tensor list: for each tensor its name, rank, dimensions and the
/// raw little-endian 64-bit payload.
void write_params(std::ostream& out, const ModelParams& params);
ModelParams read_params(std::istream& in);

}  // namespace netdelay
