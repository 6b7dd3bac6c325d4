#include "dualcube/model.hpp"

#include "dualcube/error.hpp"
#include "dualcube/projector.hpp"

namespace dualcube {

DualCubeModel::DualCubeModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.dcde.validate();
  if (config_.use_br) config_.br.validate();
  std::mt19937_64 rng(seed);
  dcde_ = std::make_unique<DcdeModel>(config_.dcde, params_, rng);
  if (config_.use_br) br_ = std::make_unique<BrModel>(config_.br, params_, rng);
}

Prediction DualCubeModel::forward(const Var& rgb) const {
  Prediction p;
  p.cube = dcde_->forward(rgb);
  const int width = rgb.shape().w;
  p.d1 = to_equi(p.cube.d1, width);
  if (p.cube.d2.defined()) p.d2 = unrotate(to_equi(p.cube.d2, width), config_.dcde.phi);
  if (br_) {
    if (!p.d2.defined()) throw ConfigError("boundary revision needs both branches");
    p.final_depth = br_->forward(concat_channels({p.d1, p.d2}));
  } else if (p.d2.defined()) {
    p.final_depth = scale(add(p.d1, p.d2), 0.5);
  } else {
    p.final_depth = p.d1;
  }
  return p;
}

void DualCubeModel::export_params(CheckpointData& out) const {
  for (const auto& [name, v] : params_.entries()) out.tensors.emplace_back("param/" + name, v.value());
}

void DualCubeModel::import_params(const CheckpointData& in) {
  for (const auto& [name, v] : params_.entries()) {
    const TensorD* t = in.find("param/" + name);
    if (!t) throw CheckpointError("checkpoint lacks parameter " + name);
    if (t->shape() != v.shape()) {
      throw CheckpointError("parameter " + name + " has shape " + t->shape().str() + ", expected " + v.shape().str());
    }
    Var handle = v;
    handle.mutable_value() = *t;
  }
}

}  // namespace dualcube
