#pragma once

// Train/val/test collections of (RGB, depth, mask) panoramas.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dualcube/mask.hpp"

namespace dualcube {

struct Sample {
  std::string stem;
  TensorD rgb;    // (1, 3, H, W)
  TensorD depth;  // (1, 1, H, W)
  ValidMask mask;
};

struct Batch {
  TensorD rgb;
  TensorD depth;
  ValidMask mask;
  int size() const { return rgb.shape().n; }
};

inline const std::vector<std::string> kSplitNames{"train", "val", "test"};

struct Dataset {
  std::string name;
  std::map<std::string, std::vector<Sample>> splits;

  /// Empty when the split is absent.
  const std::vector<Sample>& split(const std::string& which) const;
};

struct SyntheticOptions {
  int width = 256;
  int train = 64;
  int val = 8;
  int test = 16;
  std::uint64_t seed = 1;
};

/// Scene seed for sample `index` of `split`; disjoint across splits.
std::uint64_t scene_seed(std::uint64_t base, const std::string& split, int index);

Dataset make_synthetic_dataset(const SyntheticOptions& opts);

/// Reads `<root>/<split>.txt` stem lists, `<root>/rgb/<stem>.png` and
/// `<root>/depth/<stem>.pfm` (or a 16-bit `<stem>.png`). Missing list files give empty splits.
Dataset load_directory_dataset(const std::string& root, const std::string& name = "directory");

/// Writes the layout that load_directory_dataset reads.
void save_directory_dataset(const std::string& root, const Dataset& data);

/// Stacks the selected samples along N.
Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices);

}  // namespace dualcube
