#pragma once

// The full estimator: dual-cubemap encoder-decoder plus optional boundary revision.

#include <memory>
#include <random>

#include "dualcube/br.hpp"
#include "dualcube/checkpoint.hpp"
#include "dualcube/config.hpp"
#include "dualcube/dcde.hpp"

namespace dualcube {

struct Prediction {
  DcdeOutput cube;   // branch outputs in cube layout
  Var d1;            // T^-1(D1), (N, 1, H, W)
  Var d2;            // R^-1(T^-1(D2)); undefined for one branch
  Var final_depth;   // D_f
};

/// D_f is BR(D1, D2) with revision, the mean of the aligned branch depths for two
/// branches without it, and D1 alone otherwise.
class DualCubeModel {
 public:
  DualCubeModel(const ModelConfig& config, std::uint64_t seed);

  Prediction forward(const Var& rgb) const;

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Parameters as checkpoint tensors under "param/<name>".
  void export_params(CheckpointData& out) const;
  /// Throws CheckpointError when a parameter is missing or has the wrong shape.
  void import_params(const CheckpointData& in);

 private:
  ModelConfig config_;
  ParamStore params_;
  std::unique_ptr<DcdeModel> dcde_;
  std::unique_ptr<BrModel> br_;
};

}  // namespace dualcube
