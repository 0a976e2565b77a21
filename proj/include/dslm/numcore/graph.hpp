#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "dslm/numcore/tensor.hpp"

namespace dslm::num {

template <typename Real>
class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
template <typename Real>
struct Var {
  Graph<Real>* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor<Real>& value() const { return graph->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

// Tape of recorded operations. Nodes are appended in execution order, which is
// a valid topological order, and backward() walks it once in reverse.
//
// A graph built with record_gradients = false keeps values only; this is the
// inference path and costs no closures or gradient buffers.
template <typename Real>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;

  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var<Real> constant(Tensor<Real> value);
  // Leaf that receives a gradient iff value.requires_grad() and recording.
  Var<Real> leaf(Tensor<Real> value);
  // Binds an externally owned parameter without copying it. After backward()
  // its gradient is added into `grad_sink` (if non-null). Binding the same
  // tensor twice returns the same node.
  Var<Real> parameter(const Tensor<Real>& value, Tensor<Real>* grad_sink = nullptr);

  const Tensor<Real>& value(Var<Real> v) const;
  bool needs_grad(Var<Real> v) const { return nodes_.at(v.id).needs_grad; }
  // Gradient of the last backward() root w.r.t. `v`; zeros when nothing flowed.
  Tensor<Real> grad(Var<Real> v) const;

  // Reverse-mode sweep from a scalar root. A graph supports one sweep.
  void backward(Var<Real> root);

  // Used by op implementations.
  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> parents, BackwardFn fn);
  Tensor<Real>& grad_buffer(std::uint32_t id);
  const Tensor<Real>& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
  const Tensor<Real>& value_of(std::uint32_t id) const;

 private:
  struct Node {
    Tensor<Real> value;
    const Tensor<Real>* external = nullptr;
    Tensor<Real>* sink = nullptr;
    Tensor<Real> grad;
    bool has_grad = false;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var<Real> push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<Real>*, std::uint32_t> param_ids_;
  bool record_;
  bool backward_done_ = false;
};

}  // namespace dslm::num
