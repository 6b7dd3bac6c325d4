#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dualcube/tensor.hpp"

namespace dualcube {

/// Self-describing parameter file.
///
/// Layout (little-endian): "DCCK", u32 version, u32 header entry count, then per
/// entry u32 key length, key bytes, u32 value length, value bytes; u32 tensor
/// count, then per tensor u32 name length, name bytes, u32 rank (4), u32 x4
/// extents, f64 values.
struct CheckpointData {
  std::map<std::string, std::string> header;
  std::vector<std::pair<std::string, TensorD>> tensors;

  const TensorD* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes to a temporary file and renames it into place.
void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace dualcube
