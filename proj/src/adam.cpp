#include "dualcube/adam.hpp"

#include <cmath>

namespace dualcube {

AdamState make_adam_state(const ParamStore& params) {
  AdamState s;
  for (const auto& [name, v] : params.entries()) {
    s.first.emplace_back(v.shape());
    s.second.emplace_back(v.shape());
  }
  return s;
}

void adam_step(ParamStore& params, AdamState& state, double lr) {
  const auto& entries = params.entries();
  if (state.first.size() != entries.size() || state.second.size() != entries.size()) {
    throw DimensionError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Var& p = entries[i].second;
    if (state.first[i].shape() != p.shape() || state.second[i].shape() != p.shape()) {
      throw DimensionError("adam_step: moment shape mismatch for " + entries[i].first);
    }
    if (p.has_grad() && !p.node()->grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter " + entries[i].first);
    }
  }

  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Var p = entries[i].second;
    if (!p.has_grad()) {
      state.first[i].array() *= state.beta1;
      state.second[i].array() *= state.beta2;
      continue;
    }
    const auto& g = p.node()->grad.array();
    auto& m = state.first[i].array();
    auto& v = state.second[i].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    p.mutable_value().array() -= lr * (m / c1) / ((v / c2).sqrt() + state.eps);
  }
}

double grad_norm(const ParamStore& params) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    if (e.second.has_grad()) sq += e.second.node()->grad.array().square().sum();
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (const auto& e : params.entries()) {
      if (e.second.has_grad()) e.second.node()->grad.array() *= f;
    }
  }
  return norm;
}

}  // namespace dualcube
