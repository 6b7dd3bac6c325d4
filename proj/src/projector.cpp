#include "dualcube/projector.hpp"

#include <cmath>
#include <numbers>

namespace dualcube {

GridCache& GridCache::shared() {
  static GridCache cache;
  return cache;
}

std::shared_ptr<const TapTable> GridCache::lookup(const Key& key, GridKind kind, Layout src, Layout dst,
                                                  double phi) {
  std::lock_guard lock(mutex_);
  auto it = tables_.find(key);
  if (it != tables_.end()) return it->second;
  auto table = std::make_shared<const TapTable>(
      make_taps(build_grid(kind, src, dst, Rotation::radians(phi)), Interp::Bilinear));
  tables_.emplace(key, table);
  return table;
}

std::shared_ptr<const TapTable> GridCache::equi_to_cube(int width, int face_size) {
  return lookup({0, width, face_size, 0.0}, GridKind::EquiToCube, Layout::equirect(width),
                Layout::cube(face_size), 0.0);
}

std::shared_ptr<const TapTable> GridCache::cube_to_equi(int face_size, int width) {
  return lookup({1, width, face_size, 0.0}, GridKind::CubeToEqui, Layout::cube(face_size),
                Layout::equirect(width), 0.0);
}

std::shared_ptr<const TapTable> GridCache::rotate(int width, double phi) {
  const double p = Rotation::radians(phi).phi;
  return lookup({2, width, 0, p}, GridKind::Rotate, Layout::equirect(width), Layout::equirect(width), p);
}

bool exact_column_shift(int width, double phi, int* shift) {
  const double cols = Rotation::radians(phi).phi / (2.0 * std::numbers::pi) * width;
  const double r = std::round(cols);
  if (std::abs(cols - r) > 1e-9) return false;
  *shift = int(r) % width;
  return true;
}

Var to_cube(const Var& equi, int face_size) {
  const Shape& s = equi.shape();
  if (s.w != 2 * s.h) throw DimensionError("to_cube: input is not equirect " + s.str());
  return resample(equi, GridCache::shared().equi_to_cube(s.w, face_size));
}

Var to_equi(const Var& cube, int width) {
  const Shape& s = cube.shape();
  if (s.h != s.w || s.n % kFaceCount != 0) throw DimensionError("to_equi: input is not a cubemap " + s.str());
  return resample(cube, GridCache::shared().cube_to_equi(s.h, width));
}

Var rotate(const Var& equi, double phi) {
  const Shape& s = equi.shape();
  if (s.w != 2 * s.h) throw DimensionError("rotate: input is not equirect " + s.str());
  int shift = 0;
  if (exact_column_shift(s.w, phi, &shift)) return shift == 0 ? equi : roll_columns(equi, shift);
  return resample(equi, GridCache::shared().rotate(s.w, phi));
}

}  // namespace dualcube
