#include "dslm/numcore/graph.hpp"

#include "dslm/common/error.hpp"

namespace dslm::num {

template <typename Real>
Var<Real> Graph<Real>::push(Node node) {
  if (nodes_.size() >= UINT32_MAX) throw Error("graph too large");
  nodes_.push_back(std::move(node));
  return Var<Real>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var<Real> Graph<Real>::constant(Tensor<Real> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename Real>
Var<Real> Graph<Real>::leaf(Tensor<Real> value) {
  Node n;
  n.needs_grad = record_ && value.requires_grad();
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename Real>
Var<Real> Graph<Real>::parameter(const Tensor<Real>& value, Tensor<Real>* grad_sink) {
  if (auto it = param_ids_.find(&value); it != param_ids_.end()) {
    return Var<Real>{this, it->second};
  }
  if (grad_sink && grad_sink->shape() != value.shape()) {
    throw Error("gradient sink shape " + shape_string(grad_sink->shape()) + " does not match parameter " +
                shape_string(value.shape()));
  }
  Node n;
  n.external = &value;
  n.sink = record_ ? grad_sink : nullptr;
  n.needs_grad = n.sink != nullptr;
  auto v = push(std::move(n));
  param_ids_.emplace(&value, v.id);
  return v;
}

template <typename Real>
const Tensor<Real>& Graph<Real>::value_of(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

template <typename Real>
const Tensor<Real>& Graph<Real>::value(Var<Real> v) const {
  if (v.graph != this || v.id >= nodes_.size()) throw Error("variable does not belong to this graph");
  return value_of(v.id);
}

template <typename Real>
Tensor<Real> Graph<Real>::grad(Var<Real> v) const {
  const Node& n = nodes_.at(v.id);
  if (n.has_grad) return n.grad;
  return Tensor<Real>(value_of(v.id).shape());
}

template <typename Real>
Var<Real> Graph<Real>::record(Tensor<Real> value, std::initializer_list<Var<Real>> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& p : parents) {
      if (nodes_[p.id].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.backward = std::move(fn);
  }
  return push(std::move(n));
}

template <typename Real>
Tensor<Real>& Graph<Real>::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor<Real>(value_of(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename Real>
void Graph<Real>::backward(Var<Real> root) {
  if (!record_) throw Error("backward on a graph built without gradient recording");
  if (backward_done_) throw Error("backward already ran on this graph; build a new graph");
  if (value(root).size() != 1) {
    throw Error("backward root must be a scalar, got " + shape_string(value(root).shape()));
  }
  backward_done_ = true;
  if (!nodes_[root.id].needs_grad) return;
  grad_buffer(root.id)[0] = Real(1);
  for (std::uint32_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (n.sink && n.has_grad) {
      Real* dst = n.sink->data();
      const Real* src = n.grad.data();
      for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace dslm::num
