#pragma once

// Differentiable primitives. All inputs and outputs are NCHW.

#include <memory>
#include <vector>

#include "dualcube/autograd.hpp"
#include "dualcube/sphere_geom.hpp"

namespace dualcube {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var concat_channels(const std::vector<Var>& parts);

Var sum(const Var& a);
Var mean(const Var& a);

/// Cross-correlation. `weight` is (C_out, C_in, k, k), `bias` is (1, C_out, 1, 1) or undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

/// Transposed convolution: the adjoint of conv2d with the same weight tensor, so
/// `weight` is (C_in, C_out, k, k) where C_in is this op's input channel count.
/// Output extent is (H - 1) * stride - 2 * pad + k.
Var deconv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

/// Window maximum; ties route the gradient to the first occurrence in row-major order.
Var maxpool2d(const Var& x, int window = 2, int stride = 2);

Var upsample_nearest(const Var& x, int factor = 2);

/// Differentiable grid sampling; the backward pass scatters with the forward weights.
Var resample(const Var& x, std::shared_ptr<const TapTable> taps);

/// Exact circular column shift, out(c) = in(c - shift mod W).
Var roll_columns(const Var& x, int shift);

}  // namespace dualcube
