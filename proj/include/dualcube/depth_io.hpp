#pragma once

// Depth and image files. Depth maps are (1, 1, H, W) tensors in meters.

#include <string>

#include "dualcube/tensor.hpp"

namespace dualcube {

/// Single-channel PFM ("Pf"), little-endian (negative scale), rows bottom to top.
/// Stores float32, so values that are exact floats round-trip bit for bit.
void save_pfm(const std::string& path, const TensorD& depth);
TensorD load_pfm(const std::string& path);

/// 16-bit grayscale PNG, 1/4000 m per unit, clamped to [0, 65535].
inline constexpr double kPngDepthUnitsPerMeter = 4000.0;
void save_depth_png16(const std::string& path, const TensorD& depth);
TensorD load_depth_png16(const std::string& path);

/// 8-bit RGB PNG to a (1, 3, H, W) tensor in [0, 1] and back.
TensorD load_rgb_png(const std::string& path);
void save_rgb_png(const std::string& path, const TensorD& rgb);

/// Colorized 8-bit depth map normalized to the map's own [min, max].
void save_colorized_depth(const std::string& path, const TensorD& depth, double* min_out, double* max_out);

}  // namespace dualcube
