#include "camta/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace camta {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a.shape) + " and " + shape_str(b.shape));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string(op) + ": bad shape " +
                              shape_str(a.shape));
}

double clamp_prob(double p) {
  if (p < Graph::kProbEps) return Graph::kProbEps;
  if (p > 1.0 - Graph::kProbEps) return 1.0 - Graph::kProbEps;
  return p;
}

}  // namespace

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kConcat: return "concat";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kMaskedSoftmax: return "masked_softmax";
    case OpKind::kEmbeddingLookup: return "embedding_lookup";
    case OpKind::kDropout: return "dropout";
    case OpKind::kBinaryCrossEntropy: return "binary_cross_entropy";
    case OpKind::kCategoricalCrossEntropy: return "categorical_cross_entropy";
    case OpKind::kGradReverse: return "grad_reverse";
    case OpKind::kSum: return "sum";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kSliceCols: return "slice_cols";
  }
  return "?";
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value) {
  return push({OpKind::kInput, {}, std::move(value), {}, {}, 0, {}});
}

NodeId Graph::param(Tensor value) {
  return push({OpKind::kParam, {}, std::move(value), {}, {}, 0, {}});
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (ta.cols() != tb.rows()) shape_error("matmul", ta, tb);
  Tensor out = Tensor::zeros(ta.rows(), tb.cols());
  out.mat().noalias() = ta.mat() * tb.mat();
  return push({OpKind::kMatMul, {a, b}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  Tensor out = ta;
  if (ta.same_shape(tb)) {
    out.data += tb.data;
  } else if (tb.numel() == ta.cols()) {
    // row-vector broadcast over the leading (batch) axis
    out.mat().rowwise() += tb.mat().row(0);
  } else {
    shape_error("add", ta, tb);
  }
  return push({OpKind::kAdd, {a, b}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  Tensor out = ta;
  if (ta.same_shape(tb)) {
    out.data.array() *= tb.data.array();
  } else if (tb.rows() == ta.rows() && tb.cols() == 1) {
    out.mat().array().colwise() *= tb.mat().col(0).array();
  } else {
    shape_error("mul", ta, tb);
  }
  return push({OpKind::kMul, {a, b}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Index rows = node(parts[0]).value.rows();
  Index total = 0;
  std::vector<Index> widths;
  for (NodeId p : parts) {
    const Tensor& t = node(p).value;
    if (t.rows() != rows) shape_error("concat", node(parts[0]).value, t);
    widths.push_back(t.cols());
    total += t.cols();
  }
  Tensor out = Tensor::zeros(rows, total);
  Index off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.mat().middleCols(off, widths[i]) = node(parts[i]).value.mat();
    off += widths[i];
  }
  return push({OpKind::kConcat, parts, std::move(out), {}, {}, 0, std::move(widths)});
}

NodeId Graph::tanh(NodeId a) {
  Tensor out = node(a).value;
  out.data = out.data.array().tanh();
  return push({OpKind::kTanh, {a}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::sigmoid(NodeId a) {
  Tensor out = node(a).value;
  out.data = 1.0 / (1.0 + (-out.data.array()).exp());
  return push({OpKind::kSigmoid, {a}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::masked_softmax(NodeId a, const Tensor& mask) {
  const Tensor& ta = node(a).value;
  if (!ta.same_shape(mask) && ta.numel() != mask.numel())
    shape_error("masked_softmax", ta, mask);
  Tensor out = ta;
  const Index rows = ta.rows(), cols = ta.cols();
  for (Index i = 0; i < rows; ++i) {
    double mx = -HUGE_VAL;
    for (Index j = 0; j < cols; ++j)
      if (mask.data[i * cols + j] != 0.0) mx = std::max(mx, ta.at(i, j));
    if (mx == -HUGE_VAL)
      throw std::invalid_argument("masked_softmax: row " + std::to_string(i) +
                                  " has no valid position");
    double denom = 0;
    for (Index j = 0; j < cols; ++j) {
      if (mask.data[i * cols + j] != 0.0) {
        out.at(i, j) = std::exp(ta.at(i, j) - mx);
        denom += out.at(i, j);
      } else {
        out.at(i, j) = 0.0;
      }
    }
    for (Index j = 0; j < cols; ++j) out.at(i, j) /= denom;
  }
  Node n{OpKind::kMaskedSoftmax, {a}, std::move(out), {}, mask, 0, {}};
  return push(std::move(n));
}

NodeId Graph::embedding_lookup(NodeId table, const std::vector<Index>& indices) {
  const Tensor& tab = node(table).value;
  if (tab.rank() != 2) shape_error("embedding_lookup", tab);
  Tensor out = Tensor::zeros(static_cast<Index>(indices.size()), tab.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= tab.rows())
      throw std::invalid_argument("embedding_lookup: index " +
                                  std::to_string(indices[i]) + " out of range " +
                                  shape_str(tab.shape));
    out.mat().row(static_cast<Index>(i)) = tab.mat().row(indices[i]);
  }
  return push({OpKind::kEmbeddingLookup, {table}, std::move(out), {}, {}, 0, indices});
}

NodeId Graph::dropout(NodeId a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p out of [0,1)");
  const Tensor& ta = node(a).value;
  Tensor mask = ta;
  const double keep_scale = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.numel(); ++i)
    mask.data[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out = ta;
  out.data.array() *= mask.data.array();
  Node n{OpKind::kDropout, {a}, std::move(out), {}, std::move(mask), p, {}};
  return push(std::move(n));
}

NodeId Graph::binary_cross_entropy(NodeId pred, const Tensor& labels) {
  const Tensor& p = node(pred).value;
  if (p.numel() != labels.numel()) shape_error("binary_cross_entropy", p, labels);
  Tensor out = p;
  for (Index i = 0; i < p.numel(); ++i) {
    const double ph = clamp_prob(p.data[i]);
    const double y = labels.data[i];
    out.data[i] = -(y * std::log(ph) + (1.0 - y) * std::log(1.0 - ph));
  }
  Node n{OpKind::kBinaryCrossEntropy, {pred}, std::move(out), {}, labels, 0, {}};
  return push(std::move(n));
}

NodeId Graph::categorical_cross_entropy(NodeId probs, const Tensor& onehot) {
  const Tensor& p = node(probs).value;
  if (!p.same_shape(onehot)) shape_error("categorical_cross_entropy", p, onehot);
  Tensor out = Tensor::zeros(p.rows(), 1);
  for (Index i = 0; i < p.rows(); ++i) {
    double acc = 0;
    for (Index j = 0; j < p.cols(); ++j)
      if (onehot.at(i, j) != 0.0)
        acc -= onehot.at(i, j) * std::log(clamp_prob(p.at(i, j)));
    out.data[i] = acc;
  }
  Node n{OpKind::kCategoricalCrossEntropy, {probs}, std::move(out), {}, onehot, 0, {}};
  return push(std::move(n));
}

NodeId Graph::grad_reverse(NodeId a, double lambda) {
  Tensor out = node(a).value;  // identity forward, bit for bit
  return push({OpKind::kGradReverse, {a}, std::move(out), {}, {}, lambda, {}});
}

NodeId Graph::sum(NodeId a) {
  Tensor out = Tensor::scalar(node(a).value.data.sum());
  return push({OpKind::kSum, {a}, std::move(out), {}, {}, 0, {}});
}

NodeId Graph::scalar_mul(NodeId a, double c) {
  Tensor out = node(a).value;
  out.data *= c;
  return push({OpKind::kScalarMul, {a}, std::move(out), {}, {}, c, {}});
}

NodeId Graph::slice_cols(NodeId a, Index start, Index len) {
  const Tensor& ta = node(a).value;
  if (start < 0 || len <= 0 || start + len > ta.cols()) shape_error("slice_cols", ta);
  Tensor out = Tensor::zeros(ta.rows(), len);
  out.mat() = ta.mat().middleCols(start, len);
  return push({OpKind::kSliceCols, {a}, std::move(out), {}, {}, 0, {start, len}});
}

Tensor& Graph::grad_buf(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.numel() == 0) {
    n.grad = n.value;
    n.grad.data.setZero();
  }
  return n.grad;
}

const Tensor& Graph::grad(NodeId id) const {
  if (!backward_done_)
    throw std::logic_error("Graph::grad: backward() has not run");
  const Node& n = nodes_.at(id);
  if (n.grad.numel() == 0) {
    // unreached node: lazily represent the zero gradient
    const_cast<Node&>(n).grad = n.value;
    const_cast<Node&>(n).grad.data.setZero();
  }
  return n.grad;
}

void Graph::backward(NodeId loss) {
  if (nodes_.empty() || loss < 0 || loss >= static_cast<NodeId>(nodes_.size()))
    throw std::invalid_argument("backward: unknown loss node");
  if (node(loss).value.numel() != 1)
    throw std::invalid_argument("backward: loss node is not scalar");
  for (Node& n : nodes_) {
    n.grad = {};
  }
  grad_buf(loss).data[0] = 1.0;

  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.numel() == 0) continue;  // not on a path to the loss
    const Tensor& g = n.grad;
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;
      case OpKind::kMatMul: {
        const Tensor& a = node(n.inputs[0]).value;
        const Tensor& b = node(n.inputs[1]).value;
        grad_buf(n.inputs[0]).mat().noalias() += g.mat() * b.mat().transpose();
        grad_buf(n.inputs[1]).mat().noalias() += a.mat().transpose() * g.mat();
        break;
      }
      case OpKind::kAdd: {
        grad_buf(n.inputs[0]).data += g.data;
        Tensor& gb = grad_buf(n.inputs[1]);
        if (gb.numel() == g.numel()) {
          gb.data += g.data;
        } else {
          gb.mat().row(0) += g.mat().colwise().sum();
        }
        break;
      }
      case OpKind::kMul: {
        const Tensor& a = node(n.inputs[0]).value;
        const Tensor& b = node(n.inputs[1]).value;
        Tensor& ga = grad_buf(n.inputs[0]);
        Tensor& gb = grad_buf(n.inputs[1]);
        if (a.same_shape(b)) {
          ga.data.array() += g.data.array() * b.data.array();
          gb.data.array() += g.data.array() * a.data.array();
        } else {
          ga.mat().array() += g.mat().array().colwise() * b.mat().col(0).array();
          gb.mat().col(0).array() +=
              (g.mat().array() * a.mat().array()).rowwise().sum();
        }
        break;
      }
      case OpKind::kConcat: {
        Index off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          grad_buf(n.inputs[i]).mat() += g.mat().middleCols(off, n.iattrs[i]);
          off += n.iattrs[i];
        }
        break;
      }
      case OpKind::kTanh: {
        grad_buf(n.inputs[0]).data.array() +=
            g.data.array() * (1.0 - n.value.data.array().square());
        break;
      }
      case OpKind::kSigmoid: {
        grad_buf(n.inputs[0]).data.array() +=
            g.data.array() * n.value.data.array() * (1.0 - n.value.data.array());
        break;
      }
      case OpKind::kMaskedSoftmax: {
        Tensor& ga = grad_buf(n.inputs[0]);
        const Index rows = n.value.rows(), cols = n.value.cols();
        for (Index i = 0; i < rows; ++i) {
          double dot = 0;
          for (Index j = 0; j < cols; ++j) dot += g.at(i, j) * n.value.at(i, j);
          for (Index j = 0; j < cols; ++j)
            if (n.aux.data[i * cols + j] != 0.0)
              ga.at(i, j) += n.value.at(i, j) * (g.at(i, j) - dot);
        }
        break;
      }
      case OpKind::kEmbeddingLookup: {
        Tensor& gt = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.iattrs.size(); ++i)
          gt.mat().row(n.iattrs[i]) += g.mat().row(static_cast<Index>(i));
        break;
      }
      case OpKind::kDropout: {
        grad_buf(n.inputs[0]).data.array() += g.data.array() * n.aux.data.array();
        break;
      }
      case OpKind::kBinaryCrossEntropy: {
        const Tensor& p = node(n.inputs[0]).value;
        Tensor& gp = grad_buf(n.inputs[0]);
        for (Index i = 0; i < p.numel(); ++i) {
          const double pi = p.data[i];
          if (pi <= kProbEps || pi >= 1.0 - kProbEps) continue;  // clamped, flat
          const double y = n.aux.data[i];
          gp.data[i] += g.data[i] * (pi - y) / (pi * (1.0 - pi));
        }
        break;
      }
      case OpKind::kCategoricalCrossEntropy: {
        const Tensor& p = node(n.inputs[0]).value;
        Tensor& gp = grad_buf(n.inputs[0]);
        for (Index i = 0; i < p.rows(); ++i)
          for (Index j = 0; j < p.cols(); ++j) {
            const double y = n.aux.at(i, j);
            const double pij = p.at(i, j);
            if (y == 0.0 || pij <= kProbEps) continue;
            gp.at(i, j) += -g.data[i] * y / pij;
          }
        break;
      }
      case OpKind::kGradReverse: {
        grad_buf(n.inputs[0]).data += (-n.scalar) * g.data;
        break;
      }
      case OpKind::kSum: {
        grad_buf(n.inputs[0]).data.array() += g.data[0];
        break;
      }
      case OpKind::kScalarMul: {
        grad_buf(n.inputs[0]).data += n.scalar * g.data;
        break;
      }
      case OpKind::kSliceCols: {
        grad_buf(n.inputs[0]).mat().middleCols(n.iattrs[0], n.iattrs[1]) += g.mat();
        break;
      }
    }
  }
  backward_done_ = true;
}

}  // namespace camta
