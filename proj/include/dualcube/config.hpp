#pragma once

// Plain-text key=value run configuration.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dualcube/br.hpp"
#include "dualcube/dataset.hpp"
#include "dualcube/dcde.hpp"
#include "dualcube/losses.hpp"
#include "dualcube/metrics.hpp"

namespace dualcube {

struct ModelConfig {
  DcdeConfig dcde;
  bool use_br = true;
  BrConfig br;
};

struct TrainConfig {
  // Data.
  int width = 256;
  int train_count = 64;
  int val_count = 8;
  int test_count = 16;
  std::uint64_t data_seed = 1;
  std::string data_dir;  // empty: synthetic scenes
  std::string dataset_name = "synthetic";

  // Schedule. Epochs [1, lr_switch_epoch] use lr_phase1, later epochs lr_phase2.
  int epochs = 40;
  int lr_switch_epoch = 20;
  double lr_phase1 = 5e-4;
  double lr_phase2 = 1e-4;
  int batch_size = 4;
  std::uint64_t seed = 1;
  double clip_norm = 10.0;

  // Ablation toggles.
  bool enable_branch2 = true;
  bool enable_br = true;
  bool enable_gl = true;

  // Loss.
  LossWeights weights;
  double berhu_c = 0.0;  // <= 0: adaptive per batch

  // Architecture.
  std::vector<int> stage_channels{16, 32, 64, 128};
  std::vector<int> decoder_channels{64, 32, 16, 8};
  std::vector<int> fuse_stages;  // 0/1 per stage; empty fuses every stage
  std::vector<int> br_channels{16, 32, 64, 128, 256};
  bool br_skips = true;
  int br_deconv_kernel = 2;
  double phi_deg = 45.0;
  double depth_scale = 1.0;
  double head_init_depth = 2.0;  // meters; initial output of every depth head

  // Evaluation and run control.
  bool natural_log = false;
  std::string out = "run";
  std::string resume;         // checkpoint to continue from
  int stop_after_epoch = 0;   // > 0: stop once this epoch is checkpointed

  void validate() const;
  ModelConfig model() const;
  LossWeights loss_weights() const;  // gradient weight zeroed when GL is off
  SyntheticOptions synthetic() const;
  MetricsOptions metrics() const;
  double lr_for_epoch(int epoch) const;

  /// Canonical text of the architecture-defining keys.
  std::string arch_string() const;
  /// 64-bit FNV-1a of arch_string(), as 16 hex digits.
  std::string arch_hash() const;
  /// Every key in canonical order; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
};

/// Applies `key = value` lines to `base`. `#` starts a comment. Unknown keys and
/// malformed values throw ConfigError naming the line.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

}  // namespace dualcube
