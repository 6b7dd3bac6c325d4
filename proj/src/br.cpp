#include "dualcube/br.hpp"

namespace dualcube {

void BrConfig::validate() const {
  if (channels.empty()) throw ConfigError("br: at least one level is required");
  for (int c : channels) {
    if (c <= 0) throw ConfigError("br: channel counts must be positive");
  }
  if (deconv_kernel < 2 || deconv_kernel % 2 != 0) throw ConfigError("br: deconv kernel must be even");
}

BrModel::BrModel(BrConfig config, ParamStore& store, std::mt19937_64& rng) : config_(std::move(config)) {
  config_.validate();
  const auto& ch = config_.channels;
  const int levels = config_.levels();
  const int k = config_.deconv_kernel;
  const int deconv_pad = (k - 2) / 2;
  int cin = 2;
  for (int i = 0; i < levels; ++i) {
    const std::string s = "br.block" + std::to_string(i + 1);
    encoder_.push_back({make_conv(store, s + ".conv1", cin, ch[i], 3, 1, 1, rng),
                        make_conv(store, s + ".conv2", ch[i], ch[i], 3, 1, 1, rng)});
    cin = ch[i];
  }
  for (int j = 0; j < levels; ++j) {
    const int level = levels - 1 - j;  // encoder block this decoder block mirrors
    const int width = ch[level];
    const std::string s = "br.block" + std::to_string(levels + j + 1);
    deconv_.push_back(make_deconv(store, s + ".deconv", cin, width, k, 2, deconv_pad, rng));
    const int out = level == 0 ? 1 : width;
    decoder_.push_back({make_conv(store, s + ".conv1", width, width, 3, 1, 1, rng),
                        make_conv(store, s + ".conv2", width, out, 3, 1, 1, rng)});
    cin = out;
  }
  init_head(decoder_.back().second, config_.head_init_depth);
  if (config_.skips) {
    for (int i = 0; i < levels; ++i) {
      skip_.push_back(make_conv(store, "br.skip" + std::to_string(i + 1), ch[i], ch[i], 3, 1, 1, rng));
    }
  }
}

Var BrModel::forward(const Var& coarse) const {
  const Shape& s = coarse.shape();
  const int levels = config_.levels();
  const int divisor = 1 << levels;
  if (s.c != 2) throw DimensionError("br_forward: expected 2 input channels, got " + s.str());
  if (s.h % divisor != 0 || s.w % divisor != 0) {
    throw DimensionError("br_forward: H and W must be divisible by " + std::to_string(divisor) + ", got " +
                         s.str());
  }
  std::vector<Var> features;
  Var x = coarse;
  for (int i = 0; i < levels; ++i) {
    x = relu(conv2d(relu(conv2d(x, encoder_[i].first)), encoder_[i].second));
    features.push_back(x);
    x = maxpool2d(x, 2, 2);
  }
  for (int j = 0; j < levels; ++j) {
    const int level = levels - 1 - j;
    x = deconv2d(x, deconv_[j]);
    if (config_.skips) x = add(x, conv2d(features[level], skip_[level]));
    x = relu(conv2d(relu(conv2d(x, decoder_[j].first)), decoder_[j].second));
  }
  return x;
}

}  // namespace dualcube
