#include "netdelay/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netdelay/error.hpp"

namespace netdelay {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void check_shape(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": expected [" + std::to_string(rows) + ", " +
                    std::to_string(cols) + "], got [" + std::to_string(t.rows()) + ", " +
                    std::to_string(t.cols()) + "]");
  }
}

void accumulate_outer(const ParamSlot& slot, const Vec& left, const Vec& right) {
  if (slot.grad) slot.grad->matrix().noalias() += left * right.transpose();
}

void accumulate(const ParamSlot& slot, const Vec& v) {
  if (slot.grad) slot.grad->vector() += v;
}

}  // namespace

Tape::Tape(bool record_gradients) : recording_(record_gradients) { nodes_.reserve(1024); }

NodeId Tape::push(Vec value, Backward back) {
  nodes_.push_back(Node{std::move(value), Vec(), recording_ ? std::move(back) : Backward()});
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::require_dim(NodeId id, Eigen::Index dim, const char* op) const {
  if (value(id).size() != dim) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": expected width " +
                                              std::to_string(dim) + ", got " +
                                              std::to_string(value(id).size()));
  }
}

double Tape::scalar(NodeId id) const {
  const Vec& v = value(id);
  if (v.size() != 1) throw Error(ErrorCode::GraphNotScalar, "node has width " + std::to_string(v.size()));
  return v[0];
}

NodeId Tape::constant(Vec v) { return push(std::move(v)); }

NodeId Tape::zeros(Eigen::Index dim) { return push(Vec::Zero(dim)); }

NodeId Tape::linear(const DenseLayer& layer, NodeId x) {
  const Tensor& w = *layer.weight.value;
  const Tensor& b = *layer.bias.value;
  const auto in = static_cast<std::size_t>(value(x).size());
  if (w.shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "linear: weight must be a matrix");
  check_shape(w, w.rows(), in, "linear weight");
  check_shape(b, w.rows(), 1, "linear bias");
  Vec y = w.matrix() * value(x) + b.vector();
  return push(std::move(y), [this, layer, x](const Vec& g) {
    accumulate_outer(layer.weight, g, value(x));
    accumulate(layer.bias, g);
    grad(x).noalias() += layer.weight.value->matrix().transpose() * g;
  });
}

NodeId Tape::silu(NodeId x) {
  const Vec& in = value(x);
  Vec sig = in.unaryExpr([](double v) { return sigmoid(v); });
  Vec y = in.cwiseProduct(sig);
  return push(std::move(y), [this, x, sig = std::move(sig)](const Vec& g) {
    const Vec& in = value(x);
    grad(x).array() += g.array() * sig.array() * (1.0 + in.array() * (1.0 - sig.array()));
  });
}

NodeId Tape::softplus(NodeId x) {
  Vec y = value(x).unaryExpr([](double v) { return softplus_value(v); });
  return push(std::move(y), [this, x](const Vec& g) {
    grad(x).array() += g.array() * value(x).unaryExpr([](double v) { return sigmoid(v); }).array();
  });
}

NodeId Tape::concat(NodeId a, NodeId b) {
  const Eigen::Index na = value(a).size();
  const Eigen::Index nb = value(b).size();
  Vec y(na + nb);
  y << value(a), value(b);
  return push(std::move(y), [this, a, b, na, nb](const Vec& g) {
    grad(a) += g.head(na);
    grad(b) += g.tail(nb);
  });
}

NodeId Tape::add(NodeId a, NodeId b) {
  require_dim(b, value(a).size(), "add");
  Vec y = value(a) + value(b);
  return push(std::move(y), [this, a, b](const Vec& g) {
    grad(a) += g;
    grad(b) += g;
  });
}

NodeId Tape::scale(NodeId x, double factor) {
  Vec y = value(x) * factor;
  return push(std::move(y), [this, x, factor](const Vec& g) { grad(x) += factor * g; });
}

NodeId Tape::add_scalar(NodeId x, double offset) {
  Vec y = value(x).array() + offset;
  return push(std::move(y), [this, x](const Vec& g) { grad(x) += g; });
}

NodeId Tape::gru_cell(const GruWeights& w, NodeId x, NodeId h) {
  const std::size_t hidden = w.w_update.value->rows();
  const auto in_dim = static_cast<std::size_t>(value(x).size());
  const auto h_dim = static_cast<std::size_t>(value(h).size());
  if (h_dim != hidden) {
    throw Error(ErrorCode::ShapeMismatch, "gru_cell: state width " + std::to_string(h_dim) +
                                              " != hidden " + std::to_string(hidden));
  }
  for (const ParamSlot* s : {&w.w_update, &w.w_reset, &w.w_candidate}) {
    check_shape(*s->value, hidden, in_dim + hidden, "gru_cell gate weight");
  }
  for (const ParamSlot* s : {&w.b_update, &w.b_reset, &w.b_candidate}) {
    check_shape(*s->value, hidden, 1, "gru_cell gate bias");
  }
  const auto I = static_cast<Eigen::Index>(in_dim);
  const auto H = static_cast<Eigen::Index>(hidden);
  const Vec& xv = value(x);
  const Vec& hv = value(h);
  const MatrixView wz = w.w_update.value->matrix();
  const MatrixView wr = w.w_reset.value->matrix();
  const MatrixView wc = w.w_candidate.value->matrix();

  Vec z = wz.leftCols(I) * xv + wz.rightCols(H) * hv + w.b_update.value->vector();
  z = z.unaryExpr([](double v) { return sigmoid(v); });
  Vec r = wr.leftCols(I) * xv + wr.rightCols(H) * hv + w.b_reset.value->vector();
  r = r.unaryExpr([](double v) { return sigmoid(v); });
  Vec rh = r.cwiseProduct(hv);
  Vec c = wc.leftCols(I) * xv + wc.rightCols(H) * rh + w.b_candidate.value->vector();
  c = c.array().tanh();
  Vec out = hv + z.cwiseProduct(c - hv);

  if (!recording_) return push(std::move(out));
  return push(std::move(out), [this, w, x, h, I, H, z = std::move(z), r = std::move(r),
                               rh = std::move(rh), c = std::move(c)](const Vec& g) {
    const Vec& xv = value(x);
    const Vec& hv = value(h);
    const MatrixView wz = w.w_update.value->matrix();
    const MatrixView wr = w.w_reset.value->matrix();
    const MatrixView wc = w.w_candidate.value->matrix();
    Vec& gx = grad(x);
    Vec& gh = grad(h);

    const Vec dz = g.cwiseProduct(c - hv);
    const Vec dc = g.cwiseProduct(z);
    gh.array() += g.array() * (1.0 - z.array());

    const Vec da_c = dc.array() * (1.0 - c.array().square());
    if (w.w_candidate.grad) {
      auto gwc = w.w_candidate.grad->matrix();
      gwc.leftCols(I).noalias() += da_c * xv.transpose();
      gwc.rightCols(H).noalias() += da_c * rh.transpose();
    }
    accumulate(w.b_candidate, da_c);
    gx.noalias() += wc.leftCols(I).transpose() * da_c;
    const Vec d_rh = wc.rightCols(H).transpose() * da_c;
    gh.array() += d_rh.array() * r.array();

    const Vec da_r = d_rh.array() * hv.array() * r.array() * (1.0 - r.array());
    const Vec da_z = dz.array() * z.array() * (1.0 - z.array());
    for (const auto& [da, wm, ws, bs] :
         {std::tuple{&da_r, &wr, &w.w_reset, &w.b_reset},
          std::tuple{&da_z, &wz, &w.w_update, &w.b_update}}) {
      if (ws->grad) {
        auto gw = ws->grad->matrix();
        gw.leftCols(I).noalias() += *da * xv.transpose();
        gw.rightCols(H).noalias() += *da * hv.transpose();
      }
      accumulate(*bs, *da);
      gx.noalias() += wm->leftCols(I).transpose() * *da;
      gh.noalias() += wm->rightCols(H).transpose() * *da;
    }
  });
}

NodeId Tape::sum(std::span<const NodeId> xs, Eigen::Index dim) {
  Vec y = Vec::Zero(dim);
  for (NodeId x : xs) {
    require_dim(x, dim, "sum");
    y += value(x);
  }
  return push(std::move(y), [this, ids = std::vector<NodeId>(xs.begin(), xs.end())](const Vec& g) {
    for (NodeId x : ids) grad(x) += g;
  });
}

NodeId Tape::canonical_sum(std::span<const NodeId> xs, Eigen::Index dim) {
  for (NodeId x : xs) require_dim(x, dim, "canonical_sum");
  Vec y = Vec::Zero(dim);
  if (xs.size() == 1) {
    y = value(xs[0]);
  } else if (xs.size() > 1) {
    std::vector<double> terms(xs.size());
    for (Eigen::Index k = 0; k < dim; ++k) {
      for (std::size_t i = 0; i < xs.size(); ++i) terms[i] = value(xs[i])[k];
      std::sort(terms.begin(), terms.end());
      double acc = 0.0;
      for (double t : terms) acc += t;
      y[k] = acc;
    }
  }
  return push(std::move(y), [this, ids = std::vector<NodeId>(xs.begin(), xs.end())](const Vec& g) {
    for (NodeId x : ids) grad(x) += g;
  });
}

NodeId Tape::dot(NodeId x, const Vec& weights) {
  require_dim(x, weights.size(), "dot");
  Vec y(1);
  y[0] = value(x).dot(weights);
  return push(std::move(y), [this, x, weights](const Vec& g) { grad(x) += g[0] * weights; });
}

NodeId Tape::total(NodeId x) {
  Vec y(1);
  y[0] = value(x).sum();
  return push(std::move(y), [this, x](const Vec& g) { grad(x).array() += g[0]; });
}

NodeId Tape::log_mse(std::span<const NodeId> preds, std::span<const double> labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "log_mse: " + std::to_string(preds.size()) +
                                              " predictions vs " + std::to_string(labels.size()) +
                                              " labels");
  }
  if (preds.empty()) throw Error(ErrorCode::EmptyDataset, "log_mse over zero flows");
  std::vector<double> residual(preds.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = scalar(preds[i]);
    const double y = labels[i];
    if (!(y > 0.0)) throw Error(ErrorCode::NonPositiveLabel, "label " + std::to_string(y));
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::NumericalError, "prediction " + std::to_string(p) + " is not positive");
    }
    residual[i] = std::log(p / y);
    acc += residual[i] * residual[i];
  }
  const double n = static_cast<double>(preds.size());
  Vec out(1);
  out[0] = acc / n;
  return push(std::move(out), [this, ids = std::vector<NodeId>(preds.begin(), preds.end()),
                               residual = std::move(residual), n](const Vec& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      grad(ids[i])[0] += g[0] * 2.0 * residual[i] / (n * value(ids[i])[0]);
    }
  });
}

void Tape::backward(NodeId root) {
  if (!recording_) throw Error(ErrorCode::InvalidConfig, "backward on a tape that does not record");
  if (value(root).size() != 1) {
    throw Error(ErrorCode::GraphNotScalar,
                "backward root has width " + std::to_string(value(root).size()));
  }
  for (std::size_t i = 0; i <= root; ++i) nodes_[i].grad = Vec::Zero(nodes_[i].value.size());
  nodes_[root].grad[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.back) node.back(node.grad);
  }
}

}  // namespace netdelay
