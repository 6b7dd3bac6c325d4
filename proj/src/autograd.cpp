#include "dualcube/autograd.hpp"

#include <unordered_set>

namespace dualcube {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var Var::constant(TensorD value) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var Var::parameter(TensorD value) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var(std::move(n));
}

TensorD Var::grad() const {
  if (!has_grad()) return TensorD(shape());
  return node_->grad;
}

void Var::zero_grad() {
  if (node_) node_->grad = TensorD();
}

double Var::item() const {
  if (value().size() != 1) throw DimensionError("item() on a non-scalar " + shape().str());
  return value()[0];
}

Var make_result(TensorD value, std::vector<Var> inputs, std::function<void(const TensorD&)> backward) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const Var& v : inputs) any = any || v.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->inputs.reserve(inputs.size());
      for (const Var& v : inputs) n->inputs.push_back(v.node());
      n->backward = std::move(backward);
    }
  }
  return Var(std::move(n));
}

TensorD& grad_buffer_of(const std::shared_ptr<detail::Node>& v) { return v->grad_buffer(); }

void accumulate_grad(const std::shared_ptr<detail::Node>& v, const TensorD& g) {
  if (!v->requires_grad) return;
  TensorD& buf = v->grad_buffer();
  if (buf.shape() != g.shape()) throw DimensionError("gradient shape mismatch " + g.shape().str());
  buf.array() += g.array();
}

void backward(const Var& root) {
  if (!root.defined()) return;
  if (root.value().size() != 1) throw DimensionError("backward() needs a scalar root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a deterministic topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && child->backward && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  root.node()->grad_buffer().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(node->grad);
  }
  // Intermediate gradients are no longer needed; leaves keep theirs.
  for (detail::Node* node : order) {
    if (node->backward) node->grad = TensorD();
  }
}

}  // namespace dualcube
