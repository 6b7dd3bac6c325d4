#pragma once

// Boundary revision: a 10-block encoder-decoder over the two coarse equirect
// depths. Encoder blocks 1-5 are each followed by 2x2 max pooling; decoder
// blocks 6-10 are each preceded by a stride-2 deconvolution, and block 11-k
// receives encoder block k through a 3x3 skip convolution (added).

#include <random>
#include <vector>

#include "dualcube/nn.hpp"

namespace dualcube {

struct BrConfig {
  std::vector<int> channels{16, 32, 64, 128, 256};  // encoder block widths, mirrored by the decoder
  bool skips = true;
  int deconv_kernel = 2;
  double head_init_depth = 2.0;  // initial output in meters

  int levels() const { return int(channels.size()); }
  void validate() const;
};

class BrModel {
 public:
  BrModel(BrConfig config, ParamStore& store, std::mt19937_64& rng);

  /// (N, 2, H, W) coarse depths -> (N, 1, H, W) revised depth, non-negative.
  Var forward(const Var& coarse) const;

  const BrConfig& config() const { return config_; }

 private:
  struct Block {
    ConvParams first;
    ConvParams second;
  };

  BrConfig config_;
  std::vector<Block> encoder_;
  std::vector<Block> decoder_;        // decoder_[0] is block 6
  std::vector<ConvParams> deconv_;    // before each decoder block
  std::vector<ConvParams> skip_;      // skip_[k] feeds from encoder block k+1
};

}  // namespace dualcube
