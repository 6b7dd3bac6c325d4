#pragma once

#include <optional>

#include "dualcube/autograd.hpp"
#include "dualcube/mask.hpp"

namespace dualcube {

/// Reverse Huber: |x| for |x| <= c, (x^2 + c^2) / (2c) beyond.
double berhu_value(double x, double c);

/// Mean Berhu over valid pixels. The kink uses the linear-side derivative.
Var berhu(const Var& pred, const TensorD& gt, const ValidMask& mask, double c);

/// 0.2 * max |pred - gt| over valid pixels, the per-batch switch point.
double adaptive_berhu_threshold(const TensorD& pred, const TensorD& gt, const ValidMask& mask);

/// (1/n) sum |dx r| + |dy r| for the residual r = pred - gt with forward
/// differences; a pair counts only when both pixels are valid. n = valid count.
Var gradient_loss(const Var& pred, const TensorD& gt, const ValidMask& mask);

struct LossWeights {
  double branch1 = 0.1;
  double branch2 = 0.1;
  double final_depth = 0.8;
  double gradient = 1.0;
};

struct LossTerms {
  Var total;
  double berhu1 = 0.0;
  double berhu2 = 0.0;
  double berhu_final = 0.0;
  double gradient = 0.0;
  bool has_branch2 = false;
};

/// Full objective on equirect predictions. `d2_equi` is already un-rotated and may
/// be undefined (single-branch training). `c` overrides the adaptive switch point.
LossTerms total_loss_equi(const Var& d1_equi, const Var& d2_equi, const Var& final_depth, const TensorD& gt,
                          const ValidMask& mask, const LossWeights& weights, std::optional<double> c = {});

/// Same objective from the cube outputs: T^-1 on D1, R^-1 T^-1 on D2 (rotated by `phi`).
LossTerms total_loss(const Var& d1_cube, const Var& d2_cube, double phi, const Var& final_depth, const TensorD& gt,
                     const ValidMask& mask, const LossWeights& weights, std::optional<double> c = {});

}  // namespace dualcube
