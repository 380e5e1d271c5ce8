#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shiftlab/tensor.hpp"

namespace shiftlab {

using NodeId = int32_t;

// Record of executed ops. Ops append nodes in execution order (inputs always
// precede outputs), so walking ids in reverse replays the chain rule; each
// reachable Parameter receives its gradient exactly once per backward call.
// A Graph and its tensors belong to one thread; distinct graphs are
// independent.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaves. Inputs default to constant (no gradient work spent on them);
  // pass needs_grad=true to differentiate w.r.t. an input, e.g. in gradient
  // checks.
  NodeId input(Tensor value, bool needs_grad = false);
  NodeId param(Parameter& p);  // repeated calls return the same node

  // Ops.
  NodeId conv2d(NodeId x, NodeId kernel, int64_t stride, int64_t padding);
  NodeId bias_channels(NodeId x, NodeId bias);      // [N,F,H,W] + [F]
  NodeId dense(NodeId x, NodeId weight, NodeId bias);  // x[N,Di] w[Do,Di] b[Do]
  NodeId relu(NodeId x);
  NodeId global_mean_pool(NodeId x);                // [N,C,H,W] -> [N,C]
  NodeId flatten(NodeId x);                         // [N,...] -> [N,rest]
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId batch_mean(NodeId x);                      // [N,D] -> [D]
  NodeId batch_variance(NodeId x);                  // [N,D] -> [D], 1/N
  NodeId concat_rows(std::vector<NodeId> parts);    // [n_i,D] -> [sum n_i,D]
  NodeId weighted_sum(NodeId x, Tensor weights);    // scalar <w, x>
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

  // Fused op with caller-supplied forward value and backward. The backward
  // callback reads grad(self) and accumulates into the inputs via
  // accumulate_grad.
  using BackwardFn = std::function<void(Graph&, NodeId)>;
  NodeId custom(const char* op, std::vector<NodeId> inputs, Tensor value,
                BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  // Gradient of the last backward()'s output w.r.t. node id (zero if
  // unreachable). Valid after backward().
  const Tensor& grad(NodeId id);
  void accumulate_grad(NodeId id, std::span<const double> g);

  // Reverse pass from a scalar node. Throws StateError when called twice.
  void backward(NodeId loss);
  bool backward_done() const { return backward_done_; }

  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }
  const std::vector<NodeId>& inputs_of(NodeId id) const {
    return nodes_[id].inputs;
  }
  // True when gradient work for this node is worth doing (a Parameter or an
  // input marked needs_grad is upstream). Backward closures consult this to
  // skip dead branches.
  bool wants_grad(NodeId id) const;

 private:
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;  // lazily sized during backward
    bool grad_touched = false;
    bool needs_grad = false;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    Parameter* parameter = nullptr;
  };

  NodeId push(const char* op, std::vector<NodeId> inputs, Tensor value,
              BackwardFn backward, Parameter* parameter = nullptr);
  bool any_input_wants_grad(const std::vector<NodeId>& inputs) const;
  Tensor& grad_buffer(NodeId id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace shiftlab
