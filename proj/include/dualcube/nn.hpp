#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dualcube/ops.hpp"

namespace dualcube {

/// Named trainable tensors in registration order. The order fixes the optimizer
/// state layout and the checkpoint record order.
class ParamStore {
 public:
  Var add(const std::string& name, TensorD init);
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  Index numel() const;
  void zero_grad();
  /// Sets every parameter to zero (used by tests of the zero-weight contract).
  void zero_values();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// Weights (C_out, C_in, k, k), bias (1, C_out, 1, 1).
struct ConvParams {
  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;

  int in_channels() const { return weight.shape().c; }
  int out_channels() const { return weight.shape().n; }
  int kernel() const { return weight.shape().h; }
};

/// He-uniform weights, zero bias.
ConvParams make_conv(ParamStore& store, const std::string& name, int cin, int cout, int k, int stride,
                     int pad, std::mt19937_64& rng);
/// Transposed-conv weights (C_in, C_out, k, k).
ConvParams make_deconv(ParamStore& store, const std::string& name, int cin, int cout, int k, int stride,
                       int pad, std::mt19937_64& rng);

/// Output layer start: weights shrunk by `weight_scale`, bias set to `bias`, so the
/// initial prediction is close to the constant `bias`.
void init_head(ConvParams& p, double bias, double weight_scale = 0.01);

inline Var conv2d(const Var& x, const ConvParams& p) { return conv2d(x, p.weight, p.bias, p.stride, p.pad); }
inline Var deconv2d(const Var& x, const ConvParams& p) { return deconv2d(x, p.weight, p.bias, p.stride, p.pad); }

/// 2x learnable upsampling: nearest upsample, then relu(conv5) -> conv3 summed with a
/// parallel conv5 projection, followed by relu.
struct UpProjectionParams {
  ConvParams conv5;
  ConvParams conv3;
  ConvParams project5;
};

UpProjectionParams make_up_projection(ParamStore& store, const std::string& name, int cin, int cout,
                                      std::mt19937_64& rng);
Var up_projection(const Var& x, const UpProjectionParams& p);

}  // namespace dualcube
