#include "dualcube/dcde.hpp"

#include "dualcube/projector.hpp"

namespace dualcube {

void DcdeConfig::validate() const {
  if (branch.stage_channels.empty()) throw ConfigError("dcde: at least one encoder stage is required");
  if (branch.decoder_channels.size() != branch.stage_channels.size()) {
    throw ConfigError("dcde: decoder needs one up-projection per encoder stage");
  }
  if (!fuse.empty() && fuse.size() != branch.stage_channels.size()) {
    throw ConfigError("dcde: fusion flags must match the stage count");
  }
  for (int c : branch.stage_channels) {
    if (c <= 0) throw ConfigError("dcde: channel counts must be positive");
  }
  for (int c : branch.decoder_channels) {
    if (c <= 0) throw ConfigError("dcde: channel counts must be positive");
  }
}

std::pair<Var, Var> boundary_aware_fuse(const Var& f1, const Var& f2, double phi) {
  if (f1.shape() != f2.shape()) {
    throw DimensionError("boundary_aware_fuse: branch features differ " + f1.shape().str() + " vs " +
                         f2.shape().str());
  }
  const int face = f1.shape().h;
  const int width = 4 * face;
  const Var e1 = to_equi(f1, width);
  const Var e2 = to_equi(f2, width);
  const Var g1 = to_cube(hadamard(unrotate(e2, phi), e1), face);
  const Var g2 = to_cube(hadamard(e2, rotate(e1, phi)), face);
  return {add(f1, g1), add(f2, g2)};
}

DcdeModel::DcdeModel(DcdeConfig config, ParamStore& store, std::mt19937_64& rng) : config_(std::move(config)) {
  config_.validate();
  branches_.push_back(make_branch("dcde.b1", store, rng));
  if (config_.dual) branches_.push_back(make_branch("dcde.b2", store, rng));
}

DcdeModel::Branch DcdeModel::make_branch(const std::string& prefix, ParamStore& store,
                                         std::mt19937_64& rng) const {
  Branch b;
  const auto& enc = config_.branch.stage_channels;
  const auto& dec = config_.branch.decoder_channels;
  int cin = 3;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    const std::string s = prefix + ".enc" + std::to_string(i + 1);
    b.down.push_back(make_conv(store, s + ".down", cin, enc[i], 3, 2, 1, rng));
    b.conv.push_back(make_conv(store, s + ".conv", enc[i], enc[i], 3, 1, 1, rng));
    cin = enc[i];
  }
  for (std::size_t i = 0; i < dec.size(); ++i) {
    b.up.push_back(make_up_projection(store, prefix + ".up" + std::to_string(i + 1), cin, dec[i], rng));
    cin = dec[i];
  }
  b.head = make_conv(store, prefix + ".head", cin, 1, 3, 1, 1, rng);
  init_head(b.head, config_.branch.head_init_depth / config_.branch.depth_scale);
  return b;
}

Var DcdeModel::encode_stage(const Branch& b, std::size_t stage, const Var& x) const {
  return relu(conv2d(relu(conv2d(x, b.down[stage])), b.conv[stage]));
}

Var DcdeModel::decode(const Branch& b, const Var& features) const {
  Var x = features;
  for (const auto& up : b.up) x = up_projection(x, up);
  Var depth = relu(conv2d(x, b.head));
  if (config_.branch.depth_scale != 1.0) depth = scale(depth, config_.branch.depth_scale);
  return depth;
}

std::pair<Var, Var> DcdeModel::encode(const Var& cube1, const Var& cube2) const {
  Var x1 = cube1;
  Var x2 = cube2;
  for (std::size_t i = 0; i < config_.branch.stage_channels.size(); ++i) {
    x1 = encode_stage(branches_[0], i, x1);
    if (!config_.dual) continue;
    x2 = encode_stage(branches_[1], i, x2);
    if (config_.fuses_stage(i)) std::tie(x1, x2) = boundary_aware_fuse(x1, x2, config_.phi);
  }
  return {x1, x2};
}

Var DcdeModel::run_branch(int branch, const Var& cube) const {
  const Branch& b = branches_.at(std::size_t(branch));
  Var x = cube;
  for (std::size_t i = 0; i < config_.branch.stage_channels.size(); ++i) x = encode_stage(b, i, x);
  return decode(b, x);
}

DcdeOutput DcdeModel::forward(const Var& equi) const {
  const Shape& s = equi.shape();
  if (s.w != 2 * s.h || s.w % 8 != 0) {
    throw DimensionError("dcde_forward: need H = W/2 and W divisible by 8, got " + s.str());
  }
  const int face = s.w / 4;
  if (face % (1 << config_.branch.stage_channels.size()) != 0) {
    throw DimensionError("dcde_forward: face size " + std::to_string(face) + " too small for the encoder");
  }
  const Var cube1 = to_cube(equi, face);
  const Var cube2 = config_.dual ? to_cube(rotate(equi, config_.phi), face) : Var();
  auto [x1, x2] = encode(cube1, cube2);
  DcdeOutput out;
  out.d1 = decode(branches_[0], x1);
  if (config_.dual) out.d2 = decode(branches_[1], x2);
  return out;
}

}  // namespace dualcube
