#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dualcube/tensor.hpp"

namespace dualcube {

namespace detail {

struct Node {
  TensorD value;
  TensorD grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Receives this node's gradient and accumulates into the inputs' gradients.
  std::function<void(const TensorD&)> backward;

  TensorD& grad_buffer() {
    if (grad.shape() != value.shape() || grad.empty()) grad = TensorD(value.shape());
    return grad;
  }
};

}  // namespace detail

/// Handle to a value in the reverse-mode graph. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var constant(TensorD value);
  static Var parameter(TensorD value);

  bool defined() const { return node_ != nullptr; }
  const TensorD& value() const { return node_->value; }
  TensorD& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient, or zeros when nothing has been accumulated.
  TensorD grad() const;
  void zero_grad();

  /// Scalar value of a one-element Var.
  double item() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Builds an op result. `backward` is kept only when some input requires grad
/// and gradient recording is enabled on this thread.
Var make_result(TensorD value, std::vector<Var> inputs, std::function<void(const TensorD&)> backward);

/// Accumulate `g` into the gradient of `v` (no-op when `v` does not require grad).
void accumulate_grad(const std::shared_ptr<detail::Node>& v, const TensorD& g);
TensorD& grad_buffer_of(const std::shared_ptr<detail::Node>& v);

/// Reverse sweep from a scalar root. Inputs are visited in a fixed topological order.
void backward(const Var& root);

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace dualcube
