#pragma once

// Differentiable T (equirect -> cube), T^-1 (cube -> equirect) and R (horizontal
// rotation) at any resolution, backed by a process-wide grid cache.

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "dualcube/ops.hpp"

namespace dualcube {

class GridCache {
 public:
  static GridCache& shared();

  std::shared_ptr<const TapTable> equi_to_cube(int width, int face_size);
  std::shared_ptr<const TapTable> cube_to_equi(int face_size, int width);
  std::shared_ptr<const TapTable> rotate(int width, double phi);

 private:
  using Key = std::tuple<int, int, int, double>;
  std::shared_ptr<const TapTable> lookup(const Key& key, GridKind kind, Layout src, Layout dst, double phi);

  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const TapTable>> tables_;
};

/// Columns a rotation by `phi` shifts a width-`width` panorama, when that is an integer.
bool exact_column_shift(int width, double phi, int* shift);

Var to_cube(const Var& equi, int face_size);
Var to_equi(const Var& cube, int width);
/// R(x, phi). Uses the exact column roll whenever the shift is integral.
Var rotate(const Var& equi, double phi);
inline Var unrotate(const Var& equi, double phi) { return rotate(equi, -phi); }

}  // namespace dualcube
