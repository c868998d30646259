#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cookgen/tensor.hpp"

namespace cookgen {

// Storage class of a parameter; drives the quantization policy.
enum class ParamKind { ConvWeight, LinearWeight, Bias, Norm, Film, Buffer };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

template <typename Scalar>
struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::ConvWeight;
  Tensor<Scalar> value;
  // Accumulator written by Tape::backward; mutable so forward passes can
  // take networks by const reference.
  mutable Tensor<Scalar> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, ParamKind k, Shape shape)
      : name(std::move(n)), kind(k), value(shape), grad(shape), trainable(k != ParamKind::Buffer) {}
};

template <typename Scalar>
class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, Index id) : tape_(tape), id_(id) {}

  Tape<Scalar>& tape() const { return *tape_; }
  Index id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor<Scalar>& value() const;
  const Shape& shape() const { return value().shape(); }
  const Tensor<Scalar>& grad() const;
  bool requires_grad() const;

 private:
  Tape<Scalar>* tape_ = nullptr;
  Index id_ = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
// sweep over the node list is a valid topological order.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(const Tensor<Scalar>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Tensor<Scalar> value) {
    return push(std::move(value), false, nullptr);
  }

  // Leaf bound to a parameter; backward accumulates into `param.grad`
  // unless the parameter is frozen.
  Var<Scalar> parameter(const Parameter<Scalar>& param) {
    if (!param.trainable) return constant(param.value);
    const Parameter<Scalar>* p = &param;
    return push(param.value, true, [p](const Tensor<Scalar>& g) { p->grad.array() += g.array(); });
  }

  // Used by op implementations.
  Var<Scalar> push(Tensor<Scalar> value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor<Scalar>(), std::move(backward), requires_grad});
    return Var<Scalar>(this, static_cast<Index>(nodes_.size()) - 1);
  }

  const Tensor<Scalar>& value(Index id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool requires_grad(Index id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Gradient buffer of a node, allocated on first touch.
  Tensor<Scalar>& grad(Index id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() != n.value.size()) n.grad = Tensor<Scalar>(n.value.shape());
    return n.grad;
  }
  const Tensor<Scalar>& grad(Index id) const { return nodes_[static_cast<size_t>(id)].grad; }

  // Seeds d(root)/d(root) = 1 for a single-element root and sweeps backwards.
  void backward(const Var<Scalar>& root) {
    if (root.value().size() != 1)
      throw ShapeError("backward() needs a scalar root, got shape " + root.shape().str());
    grad(root.id()).array().setOnes();
    for (Index i = root.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(n.grad);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    Backward backward;
    bool requires_grad;
  };
  std::vector<Node> nodes_;
};

template <typename Scalar>
const Tensor<Scalar>& Var<Scalar>::value() const {
  return tape_->value(id_);
}
template <typename Scalar>
const Tensor<Scalar>& Var<Scalar>::grad() const {
  return tape_->grad(id_);
}
template <typename Scalar>
bool Var<Scalar>::requires_grad() const {
  return tape_->requires_grad(id_);
}

}  // namespace cookgen
