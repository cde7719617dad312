#include "netdelay/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "netdelay/error.hpp"

namespace netdelay {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume little-endian");

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be positive");
  };
  positive(flow_dim, "flow_dim");
  positive(linkport_dim, "linkport_dim");
  positive(device_dim, "device_dim");
  positive(packet_dim, "packet_dim");
  positive(t_max, "t_max");
  if (!(convergence_quantile > 0.0 && convergence_quantile <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "convergence_quantile must lie in (0, 1]");
  }
  if (!(queue_delay_unit_s > 0.0) || !std::isfinite(queue_delay_unit_s)) {
    throw Error(ErrorCode::InvalidConfig, "queue_delay_unit_s must be positive");
  }
  if (!std::isfinite(convergence_threshold)) {
    throw Error(ErrorCode::InvalidConfig, "convergence_threshold must be finite");
  }
}

namespace {

void add_mlp(ModelParams& p, const std::string& prefix, std::size_t in, std::size_t hidden_layers,
             std::size_t width, std::size_t out) {
  std::size_t fan_in = in;
  for (std::size_t layer = 0; layer <= hidden_layers; ++layer) {
    const std::size_t fan_out = layer == hidden_layers ? out : width;
    const std::string name = prefix + ".layer" + std::to_string(layer);
    p.add(name + ".weight", Tensor({fan_out, fan_in}));
    p.add(name + ".bias", Tensor({fan_out}));
    fan_in = fan_out;
  }
}

void add_gru(ModelParams& p, const std::string& prefix, std::size_t in, std::size_t hidden) {
  for (const char* gate : {"update", "reset", "candidate"}) {
    p.add(prefix + "." + gate + ".weight", Tensor({hidden, in + hidden}));
    p.add(prefix + "." + gate + ".bias", Tensor({hidden}));
  }
}

ParamSlot slot(const ModelParams& params, ModelParams* grads, const std::string& name) {
  return ParamSlot{&params.at(name), grads ? &grads->at(name) : nullptr};
}

MlpWeights bind_mlp(const ModelParams& params, ModelParams* grads, const std::string& prefix) {
  MlpWeights m;
  for (std::size_t layer = 0;; ++layer) {
    const std::string name = prefix + ".layer" + std::to_string(layer);
    if (!params.contains(name + ".weight")) break;
    m.layers.push_back(DenseLayer{slot(params, grads, name + ".weight"),
                                  slot(params, grads, name + ".bias")});
  }
  if (m.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "no layers for '" + prefix + "'");
  return m;
}

GruWeights bind_gru(const ModelParams& params, ModelParams* grads, const std::string& prefix) {
  return GruWeights{slot(params, grads, prefix + ".update.weight"),
                    slot(params, grads, prefix + ".update.bias"),
                    slot(params, grads, prefix + ".reset.weight"),
                    slot(params, grads, prefix + ".reset.bias"),
                    slot(params, grads, prefix + ".candidate.weight"),
                    slot(params, grads, prefix + ".candidate.bias")};
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& c) {
  c.validate();
  ModelParams p;
  const std::size_t h = c.mlp_hidden_layers;
  add_mlp(p, "flow_encoder", kFlowScalarFeatures + c.packet_dim, h, c.flow_dim, c.flow_dim);
  add_mlp(p, "linkport_encoder.router", kLinkFeatures, h, c.linkport_dim, c.linkport_dim);
  add_mlp(p, "linkport_encoder.switch", kLinkFeatures, h, c.linkport_dim, c.linkport_dim);
  add_mlp(p, "device_encoder.router", c.linkport_dim, h, c.device_dim, c.device_dim);
  add_mlp(p, "device_encoder.switch", c.linkport_dim, h, c.device_dim, c.device_dim);
  add_gru(p, "packet_encoder.layer1", kBinFeatures, c.packet_dim);
  add_gru(p, "packet_encoder.layer2", c.packet_dim, c.packet_dim);
  add_gru(p, "flow_rnn", c.device_dim + c.linkport_dim, c.flow_dim);
  add_gru(p, "linkport_update", c.flow_dim, c.linkport_dim);
  add_gru(p, "device_update", c.linkport_dim, c.device_dim);
  add_mlp(p, "readout", c.flow_dim, h, c.flow_dim, 1);
  return p;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::ShapeMismatch, "no parameter '" + name + "'");
  return tensors_[it->second];
}

Tensor& ModelParams::at(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const ModelParams&>(*this).at(name));
}

void ModelParams::add(std::string name, Tensor tensor) {
  if (!index_.emplace(name, tensors_.size()).second) {
    throw Error(ErrorCode::InvalidConfig, "duplicate parameter '" + name + "'");
  }
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

void ModelParams::fill(double v) {
  for (Tensor& t : tensors_) t.fill(v);
}

ModelParams init_params(std::uint64_t seed, const ModelConfig& config) {
  ModelParams p = ModelParams::zeros(config);
  std::mt19937_64 rng(seed);
  for (Tensor& t : p.tensors()) {
    if (t.shape.size() != 2) continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
    for (double& w : t.data) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
      w = (2.0 * u - 1.0) * bound;
    }
  }
  return p;
}

ModelWeights bind_weights(const ModelParams& params, ModelParams* grads) {
  if (grads && grads->names() != params.names()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient buffers do not match the parameter layout");
  }
  ModelWeights w;
  w.flow_encoder = bind_mlp(params, grads, "flow_encoder");
  w.linkport_encoder_router = bind_mlp(params, grads, "linkport_encoder.router");
  w.linkport_encoder_switch = bind_mlp(params, grads, "linkport_encoder.switch");
  w.device_encoder_router = bind_mlp(params, grads, "device_encoder.router");
  w.device_encoder_switch = bind_mlp(params, grads, "device_encoder.switch");
  w.packet_layer1 = bind_gru(params, grads, "packet_encoder.layer1");
  w.packet_layer2 = bind_gru(params, grads, "packet_encoder.layer2");
  w.flow_rnn = bind_gru(params, grads, "flow_rnn");
  w.linkport_update = bind_gru(params, grads, "linkport_update");
  w.device_update = bind_gru(params, grads, "device_update");
  w.readout = bind_mlp(params, grads, "readout");
  return w;
}

// ---------------------------------------------------------------------------
// Binary tensor list

namespace {

constexpr char kMagic[8] = {'N', 'D', 'P', 'A', 'R', 'M', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorCode::ParseError, "truncated parameter block");
  return v;
}

}  // namespace

void write_params(std::ostream& out, const ModelParams& params) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    const Tensor& t = params.tensors()[i];
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, t.shape.size());
    for (std::size_t d : t.shape) put_u64(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCode::IoError, "failed to write parameters");
}

ModelParams read_params(std::istream& in) {
  char magic[sizeof kMagic] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::ParseError, "not a parameter block");
  }
  constexpr std::uint64_t kSanity = 1u << 20;
  const std::uint64_t count = get_u64(in);
  if (count > kSanity) throw Error(ErrorCode::ParseError, "implausible tensor count");
  ModelParams p;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = get_u64(in);
    if (name_len > 4096) throw Error(ErrorCode::ParseError, "implausible tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const std::uint64_t rank = get_u64(in);
    if (rank == 0 || rank > 8) throw Error(ErrorCode::ParseError, "bad rank for '" + name + "'");
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = get_u64(in);
      if (dim == 0 || dim > kSanity) throw Error(ErrorCode::ParseError, "bad dimension for '" + name + "'");
      shape.push_back(dim);
    }
    Tensor t(std::move(shape));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::ParseError, "truncated payload for '" + name + "'");
    p.add(std::move(name), std::move(t));
  }
  return p;
}

}  // namespace netdelay
