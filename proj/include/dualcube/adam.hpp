#pragma once

#include <cstdint>
#include <vector>

#include "dualcube/nn.hpp"

namespace dualcube {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<TensorD> first;   // aligned with ParamStore::entries()
  std::vector<TensorD> second;
};

AdamState make_adam_state(const ParamStore& params);

/// One bias-corrected Adam update from the gradients currently held by `params`.
/// Throws NumericError (leaving params and state untouched) on a non-finite gradient.
void adam_step(ParamStore& params, AdamState& state, double lr);

/// Global L2 norm of all parameter gradients.
double grad_norm(const ParamStore& params);

/// Rescales gradients so their global norm is at most `max_norm`. Returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

}  // namespace dualcube
