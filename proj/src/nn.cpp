#include "dualcube/nn.hpp"

#include <cmath>

namespace dualcube {

Var ParamStore::add(const std::string& name, TensorD init) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  Var v = Var::parameter(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

Var ParamStore::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw ConfigError("unknown parameter " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

Index ParamStore::numel() const {
  Index total = 0;
  for (const auto& e : entries_) total += e.second.value().size();
  return total;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParamStore::zero_values() {
  for (auto& e : entries_) e.second.mutable_value().fill(0.0);
}

namespace {

TensorD he_uniform(Shape s, double fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  TensorD t(s);
  for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

ConvParams make_conv(ParamStore& store, const std::string& name, int cin, int cout, int k, int stride,
                     int pad, std::mt19937_64& rng) {
  ConvParams p;
  p.weight = store.add(name + ".weight", he_uniform(Shape{cout, cin, k, k}, double(cin) * k * k, rng));
  p.bias = store.add(name + ".bias", TensorD(Shape{1, cout, 1, 1}));
  p.stride = stride;
  p.pad = pad;
  return p;
}

ConvParams make_deconv(ParamStore& store, const std::string& name, int cin, int cout, int k, int stride,
                       int pad, std::mt19937_64& rng) {
  // Each output pixel sees cin * (k / stride)^2 inputs.
  const double fan_in = std::max(1.0, double(cin) * k * k / (double(stride) * stride));
  ConvParams p;
  p.weight = store.add(name + ".weight", he_uniform(Shape{cin, cout, k, k}, fan_in, rng));
  p.bias = store.add(name + ".bias", TensorD(Shape{1, cout, 1, 1}));
  p.stride = stride;
  p.pad = pad;
  return p;
}

void init_head(ConvParams& p, double bias, double weight_scale) {
  p.weight.mutable_value().array() *= weight_scale;
  p.bias.mutable_value().fill(bias);
}

UpProjectionParams make_up_projection(ParamStore& store, const std::string& name, int cin, int cout,
                                      std::mt19937_64& rng) {
  UpProjectionParams p;
  p.conv5 = make_conv(store, name + ".conv5", cin, cout, 5, 1, 2, rng);
  p.conv3 = make_conv(store, name + ".conv3", cout, cout, 3, 1, 1, rng);
  p.project5 = make_conv(store, name + ".project5", cin, cout, 5, 1, 2, rng);
  return p;
}

Var up_projection(const Var& x, const UpProjectionParams& p) {
  const Var up = upsample_nearest(x, 2);
  const Var main = conv2d(relu(conv2d(up, p.conv5)), p.conv3);
  const Var side = conv2d(up, p.project5);
  return relu(add(main, side));
}

}  // namespace dualcube
