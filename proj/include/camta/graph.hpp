#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "camta/rng.hpp"
#include "camta/tensor.hpp"

namespace camta {

using NodeId = std::int32_t;

enum class OpKind {
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kMul,
  kConcat,
  kTanh,
  kSigmoid,
  kMaskedSoftmax,
  kEmbeddingLookup,
  kDropout,
  kBinaryCrossEntropy,
  kCategoricalCrossEntropy,
  kGradReverse,
  kSum,
  kScalarMul,
  kSliceCols,
};

const char* op_name(OpKind k);

// Reverse-mode autodiff tape over dense double tensors. Nodes are created in
// topological order by construction (an op can only reference existing ids),
// so backward is a single reverse sweep. A graph is single-owner during a
// forward/backward pass; distinct graphs over shared read-only parameter
// snapshots may run concurrently.
class Graph {
 public:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;        // allocated lazily in backward()
    Tensor aux;         // labels / softmax mask / dropout mask
    double scalar = 0;  // lambda / scale factor / dropout p
    std::vector<Index> iattrs;  // embedding indices, slice bounds, concat widths
  };

  // leaves
  NodeId input(Tensor value);
  NodeId param(Tensor value);

  // op catalogue
  NodeId matmul(NodeId a, NodeId b);
  // add: identical shapes, or b a vector broadcast over the rows of a
  NodeId add(NodeId a, NodeId b);
  // mul: identical shapes, or b a column [m,1] broadcast across the columns of a
  NodeId mul(NodeId a, NodeId b);
  NodeId concat(const std::vector<NodeId>& parts);  // last (column) axis
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  // softmax per row over positions where mask != 0; masked outputs are exactly 0
  NodeId masked_softmax(NodeId a, const Tensor& mask);
  NodeId embedding_lookup(NodeId table, const std::vector<Index>& indices);
  // inverted dropout; identity when p == 0
  NodeId dropout(NodeId a, double p, Rng& rng);
  // element-wise full binary cross entropy, probabilities clamped to [eps, 1-eps]
  NodeId binary_cross_entropy(NodeId pred, const Tensor& labels);
  // per-row cross entropy of probability rows vs one-hot targets
  NodeId categorical_cross_entropy(NodeId probs, const Tensor& onehot);
  // identity forward; backward scales the incoming gradient by -lambda
  NodeId grad_reverse(NodeId a, double lambda);
  NodeId sum(NodeId a);  // full reduction to a scalar
  NodeId scalar_mul(NodeId a, double c);
  NodeId slice_cols(NodeId a, Index start, Index len);

  // Gradient of the scalar loss node w.r.t. every node, by reverse sweep.
  // Must follow a completed forward construction; grads of kParam nodes are
  // what training consumes. Unreached parameters get zero gradients.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const Tensor& grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  static constexpr double kProbEps = 1e-12;

 private:
  NodeId push(Node n);
  const Node& node(NodeId id) const { return nodes_.at(id); }
  Tensor& grad_buf(NodeId id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace camta
