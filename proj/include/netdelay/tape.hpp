#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "netdelay/tensor.hpp"

namespace netdelay {

/// A learnable tensor as seen by the tape: its value and, when gradients are
/// being collected, the buffer that backward() accumulates into.
struct ParamSlot {
  const Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// y = W x + b with W of shape [out, in].
struct DenseLayer {
  ParamSlot weight;
  ParamSlot bias;
};

/// Affine layers with SiLU between them; the last layer is linear.
struct MlpWeights {
  std::vector<DenseLayer> layers;
};

/// Standard GRU cell. Each gate matrix has shape [hidden, input + hidden] and
/// acts on the concatenation [x, h] (for the candidate: [x, r * h]).
struct GruWeights {
  ParamSlot w_update, b_update;
  ParamSlot w_reset, b_reset;
  ParamSlot w_candidate, b_candidate;

  std::size_t hidden() const { return w_update.value->rows(); }
  std::size_t input() const { return w_update.value->cols() - hidden(); }
};

using NodeId = std::uint32_t;

/// Records a computation over vectors of doubles and replays it backwards.
///
/// Nodes are vector-valued; matrix parameters live outside the tape and are
/// referenced through ParamSlot. backward() visits nodes in reverse creation
/// order, so gradient accumulation order is fixed by the forward program.
/// With record_gradients = false only values are kept, which is what the
/// finite-difference oracle and inference use.
class Tape {
 public:
  explicit Tape(bool record_gradients = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  NodeId constant(Vec v);
  NodeId zeros(Eigen::Index dim);

  NodeId linear(const DenseLayer& layer, NodeId x);
  NodeId silu(NodeId x);
  NodeId softplus(NodeId x);
  NodeId concat(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId add_scalar(NodeId x, double offset);
  NodeId gru_cell(const GruWeights& weights, NodeId x, NodeId h);

  /// Sum in the order given.
  NodeId sum(std::span<const NodeId> xs, Eigen::Index dim);
  /// Sum whose result does not depend on the order of `xs`: each coordinate
  /// adds its terms in ascending value order. Empty input gives zeros(dim).
  NodeId canonical_sum(std::span<const NodeId> xs, Eigen::Index dim);

  /// Scalar <x, weights>.
  NodeId dot(NodeId x, const Vec& weights);
  /// Scalar sum of all coordinates of x.
  NodeId total(NodeId x);
  /// Scalar mean over i of (ln preds[i] - ln labels[i])^2; preds are scalar nodes.
  NodeId log_mse(std::span<const NodeId> preds, std::span<const double> labels);

  const Vec& value(NodeId id) const { return nodes_.at(id).value; }
  double scalar(NodeId id) const;

  /// Reverse sweep from a scalar root; parameter gradients accumulate into
  /// the ParamSlot::grad buffers touched by the recorded ops.
  void backward(NodeId root);
  const Vec& gradient(NodeId id) const { return nodes_.at(id).grad; }

 private:
  using Backward = std::function<void(const Vec& grad_out)>;

  struct Node {
    Vec value;
    Vec grad;
    Backward back;
  };

  NodeId push(Vec value, Backward back = {});
  Vec& grad(NodeId id) { return nodes_[id].grad; }
  void require_dim(NodeId id, Eigen::Index dim, const char* op) const;

  bool recording_;
  std::vector<Node> nodes_;
};

}  // namespace netdelay
