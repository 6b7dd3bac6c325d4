#pragma once

#include <cstdint>
#include <vector>

#include "dualcube/tensor.hpp"

namespace dualcube {

/// Pixels that take part in losses and metrics. Same extents as the depth map.
struct ValidMask {
  Shape shape;
  std::vector<std::uint8_t> valid;

  static ValidMask all(Shape s) { return {s, std::vector<std::uint8_t>(std::size_t(s.numel()), 1)}; }
  Index count() const {
    Index n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }
  bool operator[](Index i) const { return valid[std::size_t(i)] != 0; }
  bool operator==(const ValidMask&) const = default;

  /// Samples [first, first + n).
  ValidMask slice(int first, int n) const {
    const Index per = Index(shape.c) * shape.plane();
    Shape s = shape;
    s.n = n;
    return {s, std::vector<std::uint8_t>(valid.begin() + first * per, valid.begin() + (first + n) * per)};
  }
};

ValidMask stack_masks(const std::vector<const ValidMask*>& parts);

}  // namespace dualcube
