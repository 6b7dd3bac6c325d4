#pragma once

#include <bit>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "dualcube/ops.hpp"
#include "dualcube/tensor.hpp"

namespace dualcube::test {

inline TensorD random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  TensorD t(s);
  for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

inline double max_abs_diff(const TensorD& a, const TensorD& b) {
  return (a.array() - b.array()).abs().maxCoeff();
}

inline bool bit_identical(const TensorD& a, const TensorD& b) {
  if (a.shape() != b.shape()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

// Random linear functional so vector-valued ops reduce to a generic scalar.
inline std::function<Var(const Var&)> probe(const std::function<Var(const Var&)>& op, const Shape& out,
                                            std::mt19937_64& rng) {
  const Var r = Var::constant(random_tensor(out, rng));
  return [op, r](const Var& x) { return sum(hadamard(op(x), r)); };
}

// Values bounded away from zero so relu stays differentiable under the probe step.
inline TensorD away_from_zero(Shape s, std::mt19937_64& rng) {
  TensorD t = random_tensor(s, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (Index i = 0; i < t.size(); ++i) {
    if (sign(rng)) t[i] = -t[i];
  }
  return t;
}

// Distinct values so pooling windows have no ties.
inline TensorD distinct(Shape s, std::mt19937_64& rng) {
  TensorD t(s);
  std::vector<double> v(std::size_t(s.numel()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * double(i);
  std::shuffle(v.begin(), v.end(), rng);
  for (Index i = 0; i < t.size(); ++i) t[i] = v[std::size_t(i)];
  return t;
}

}  // namespace dualcube::test
