#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "netgnn/autodiff/tensor.hpp"

namespace netgnn::ad {

template <typename Real>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Real>
struct Var {
  Tape<Real>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Real>& value() const { return tape->value(id); }
  const Tensor<Real>& grad() const { return tape->grad(id); }
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node
// list is already topologically sorted; backward() walks it in reverse.
template <typename Real>
class Tape {
 public:
  // Called as back(tape, node_id) once the node's gradient is complete.
  using Backward = std::function<void(Tape&, std::size_t)>;

  Var<Real> constant(Tensor<Real> v) { return push(std::move(v), false, nullptr, "constant"); }
  Var<Real> variable(Tensor<Real> v) { return push(std::move(v), true, nullptr, "variable"); }

  // Records an op output. The node needs a gradient iff any input does.
  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> inputs, Backward back,
                   const char* op) {
    bool needs = false;
    for (const Var<Real>& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), needs, needs ? std::move(back) : nullptr, op);
  }
  Var<Real> record(Tensor<Real> value, const std::vector<Var<Real>>& inputs, Backward back,
                   const char* op) {
    bool needs = false;
    for (const Var<Real>& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), needs, needs ? std::move(back) : nullptr, op);
  }

  const Tensor<Real>& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor<Real>& grad(std::size_t id) const { return nodes_[id].grad; }
  Tensor<Real>& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Exact reverse-mode gradients of a scalar output w.r.t. every node that
  // needs one. Variables the output does not depend on get zero gradients.
  void backward(Var<Real> out) {
    if (nodes_[out.id].value.size() != 1) {
      throw DataError("backward needs a scalar output, got shape " + shape_str(out.shape()));
    }
    for (std::size_t i = 0; i <= out.id; ++i) {
      Node& n = nodes_[i];
      if (n.needs_grad) n.grad = Tensor<Real>(n.value.shape());
    }
    if (!nodes_[out.id].needs_grad) return;
    nodes_[out.id].grad[0] = Real(1);
    for (std::size_t i = out.id + 1; i-- > 0;) {
      if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back(*this, i);
    }
  }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    Backward back;
    bool needs_grad = false;
  };

  Var<Real> push(Tensor<Real> v, bool needs, Backward back, const char* op) {
    for (Real x : v.values()) {
      if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
    }
    nodes_.push_back(Node{std::move(v), Tensor<Real>(), std::move(back), needs});
    return Var<Real>{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace netgnn::ad
