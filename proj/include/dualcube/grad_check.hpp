#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dualcube/autograd.hpp"

namespace dualcube {

/// Max-norm relative discrepancy between reverse-mode and central-difference
/// gradients: max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|).
struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  Index coordinates = 0;
};

/// Checks d f(x) / dx for a scalar-valued composite `f` at `x`.
double grad_check(const std::function<Var(const Var&)>& f, const TensorD& x, double eps = 1e-4);

/// Checks gradients with respect to parameters that `f` closes over. When
/// `max_coords` is positive, only that many coordinates (drawn with `seed`) are
/// perturbed per parameter.
GradCheckReport grad_check_params(const std::function<Var()>& f, const std::vector<Var>& params,
                                  double eps = 1e-4, Index max_coords = 0, std::uint64_t seed = 0);

}  // namespace dualcube
