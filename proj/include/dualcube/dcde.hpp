#pragma once

// Dual-cubemap depth estimation: two cube branches, one fed the panorama and one
// fed its 45-degree rotation, exchanging features after every encoder stage.

#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "dualcube/nn.hpp"

namespace dualcube {

struct BranchConfig {
  std::vector<int> stage_channels{16, 32, 64, 128};  // stride-2 encoder stages
  std::vector<int> decoder_channels{64, 32, 16, 8};  // one up-projection per stage
  double depth_scale = 1.0;                          // meters per head unit
  double head_init_depth = 2.0;                      // initial output in meters
};

struct DcdeConfig {
  BranchConfig branch;
  bool dual = true;
  std::vector<bool> fuse;      // per stage; empty means fuse after every stage
  double phi = std::numbers::pi / 4.0;

  bool fuses_stage(std::size_t i) const { return dual && (fuse.empty() || (i < fuse.size() && fuse[i])); }
  void validate() const;
};

/// Cube-layout depths, (6N, 1, f, f). `d2` stays in the rotated frame and is
/// undefined for a single-branch model.
struct DcdeOutput {
  Var d1;
  Var d2;
};

/// Cross-branch exchange at the features' own resolution:
///   f1' = f1 + T(R^-1(T^-1 f2) (.) T^-1 f1)
///   f2' = f2 + T(T^-1 f2 (.) R(T^-1 f1))
std::pair<Var, Var> boundary_aware_fuse(const Var& f1, const Var& f2, double phi);

class DcdeModel {
 public:
  DcdeModel(DcdeConfig config, ParamStore& store, std::mt19937_64& rng);

  /// `equi` is (N, 3, H, W) with H = W / 2 and W divisible by 8.
  DcdeOutput forward(const Var& equi) const;
  /// Branch 2 alone on a cube input; exposed for symmetry tests.
  Var run_branch(int branch, const Var& cube) const;
  /// Encoder stages of both branches with fusion; returns the deepest features.
  std::pair<Var, Var> encode(const Var& cube1, const Var& cube2) const;

  const DcdeConfig& config() const { return config_; }

 private:
  struct Branch {
    std::vector<ConvParams> down;
    std::vector<ConvParams> conv;
    std::vector<UpProjectionParams> up;
    ConvParams head;
  };

  Branch make_branch(const std::string& prefix, ParamStore& store, std::mt19937_64& rng) const;
  Var encode_stage(const Branch& b, std::size_t stage, const Var& x) const;
  Var decode(const Branch& b, const Var& features) const;

  DcdeConfig config_;
  std::vector<Branch> branches_;
};

}  // namespace dualcube
