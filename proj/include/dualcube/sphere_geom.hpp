#pragma once

// Spherical conventions shared by every module.
//
// Directions are y-up. Longitude theta is 0 at +z and grows toward +x; latitude
// lambda is +pi/2 at +y. Normalized equirect coordinates (u, v) map to
//   theta = 2*pi*u - pi,  lambda = pi/2 - pi*v
// and pixel (row, col) of a W x H map has its center at u = (col + 0.5) / W.
//
// Cube faces are ordered front(+z), right(+x), back(-z), left(-x), up(+y),
// down(-y). Face coordinates (s, t) are in [0, 1] with s growing along the
// face's right axis and t along its down axis.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "dualcube/error.hpp"
#include "dualcube/tensor.hpp"

namespace dualcube {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

enum class Face : int { Front = 0, Right = 1, Back = 2, Left = 3, Up = 4, Down = 5 };
inline constexpr int kFaceCount = 6;

const char* face_name(Face f);

namespace detail {

struct FaceFrame {
  std::array<double, 3> forward;
  std::array<double, 3> right;
  std::array<double, 3> down;
};

inline constexpr std::array<FaceFrame, kFaceCount> kFaceFrames{{
    {{0, 0, 1}, {1, 0, 0}, {0, -1, 0}},    // front
    {{1, 0, 0}, {0, 0, -1}, {0, -1, 0}},   // right
    {{0, 0, -1}, {-1, 0, 0}, {0, -1, 0}},  // back
    {{-1, 0, 0}, {0, 0, 1}, {0, -1, 0}},   // left
    {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}},     // up
    {{0, -1, 0}, {1, 0, 0}, {0, 0, -1}},   // down
}};

template <typename Scalar>
Vec3<Scalar> axis(const std::array<double, 3>& a) {
  return Vec3<Scalar>(Scalar(a[0]), Scalar(a[1]), Scalar(a[2]));
}

template <typename Scalar>
void require_unit(const Vec3<Scalar>& d, const char* op) {
  const Scalar n = d.norm();
  if (!(n > Scalar(0))) throw DomainError(std::string(op) + ": zero direction");
  if (std::abs(n - Scalar(1)) > Scalar(1e-6)) {
    throw DomainError(std::string(op) + ": direction is not unit length");
  }
}

}  // namespace detail

template <typename Scalar>
Vec3<Scalar> pixel_to_direction(Scalar u, Scalar v) {
  if (!(u >= Scalar(0) && u <= Scalar(1) && v >= Scalar(0) && v <= Scalar(1))) {
    throw DomainError("pixel_to_direction: (u, v) outside [0, 1]");
  }
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar theta = Scalar(2) * pi * u - pi;
  const Scalar lambda = pi / Scalar(2) - pi * v;
  const Scalar cl = std::cos(lambda);
  return Vec3<Scalar>(cl * std::sin(theta), std::sin(lambda), cl * std::cos(theta));
}

/// Inverse of pixel_to_direction. At the poles u is fixed to 0.5.
template <typename Scalar>
Vec2<Scalar> direction_to_pixel(const Vec3<Scalar>& d) {
  detail::require_unit(d, "direction_to_pixel");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar horiz = std::hypot(d.x(), d.z());
  const Scalar lambda = std::atan2(d.y(), horiz);
  const Scalar theta = horiz > Scalar(0) ? std::atan2(d.x(), d.z()) : Scalar(0);
  return Vec2<Scalar>((theta + pi) / (Scalar(2) * pi), (pi / Scalar(2) - lambda) / pi);
}

template <typename Scalar>
struct CubeCoord {
  Face face;
  Scalar s;
  Scalar t;
};

/// Face with the largest |component|; ties go to the lowest face index.
template <typename Scalar>
Face dominant_face(const Vec3<Scalar>& d) {
  int best = 0;
  Scalar best_dot = -1;
  for (int f = 0; f < kFaceCount; ++f) {
    const Scalar dot = d.dot(detail::axis<Scalar>(detail::kFaceFrames[f].forward));
    if (dot > best_dot) {
      best_dot = dot;
      best = f;
    }
  }
  return static_cast<Face>(best);
}

template <typename Scalar>
CubeCoord<Scalar> direction_to_cube(const Vec3<Scalar>& d) {
  detail::require_unit(d, "direction_to_cube");
  const Face face = dominant_face(d);
  const auto& fr = detail::kFaceFrames[static_cast<int>(face)];
  const Scalar depth = d.dot(detail::axis<Scalar>(fr.forward));
  const Scalar s = (Scalar(1) + d.dot(detail::axis<Scalar>(fr.right)) / depth) / Scalar(2);
  const Scalar t = (Scalar(1) + d.dot(detail::axis<Scalar>(fr.down)) / depth) / Scalar(2);
  return {face, s, t};
}

template <typename Scalar>
Vec3<Scalar> cube_to_direction(Face face, Scalar s, Scalar t) {
  const int id = static_cast<int>(face);
  if (id < 0 || id >= kFaceCount) throw DomainError("cube_to_direction: invalid face id");
  if (!(s >= Scalar(0) && s <= Scalar(1) && t >= Scalar(0) && t <= Scalar(1))) {
    throw DomainError("cube_to_direction: (s, t) outside [0, 1]");
  }
  const auto& fr = detail::kFaceFrames[id];
  const Vec3<Scalar> p = detail::axis<Scalar>(fr.forward) +
                         (Scalar(2) * s - Scalar(1)) * detail::axis<Scalar>(fr.right) +
                         (Scalar(2) * t - Scalar(1)) * detail::axis<Scalar>(fr.down);
  return p.normalized();
}

template <typename Scalar>
Vec3<Scalar> cube_to_direction(int face_id, Scalar s, Scalar t) {
  if (face_id < 0 || face_id >= kFaceCount) throw DomainError("cube_to_direction: invalid face id");
  return cube_to_direction(static_cast<Face>(face_id), s, t);
}

// ---------------------------------------------------------------------------
// Sampling grids

/// Extents of one sample in a given layout: a single equirect plane or six faces.
struct Layout {
  int planes = 1;
  int rows = 0;
  int cols = 0;

  static Layout equirect(int width) { return {1, width / 2, width}; }
  static Layout cube(int face_size) { return {kFaceCount, face_size, face_size}; }
  bool is_cube() const { return planes == kFaceCount; }
  Index per_sample() const { return Index(planes) * rows * cols; }
  bool operator==(const Layout&) const = default;
  std::string str() const;
};

/// Horizontal (longitude) rotation. `phi` is kept in [0, 2*pi).
struct Rotation {
  double phi = 0.0;

  static Rotation radians(double phi);
  static Rotation eighths(int k) { return radians(k * std::numbers::pi / 4.0); }
};

enum class GridKind : std::uint32_t { EquiToCube = 0, CubeToEqui = 1, Rotate = 2 };
enum class Interp { Bilinear, Nearest };

/// Continuous source coordinates for every destination pixel. Pure data.
struct SamplingGrid {
  GridKind kind = GridKind::Rotate;
  Layout src;
  Layout dst;
  bool wrap_cols = false;  // source longitude is periodic
  std::vector<std::int32_t> plane;
  std::vector<double> row;
  std::vector<double> col;
  std::vector<std::uint8_t> valid;

  Index size() const { return Index(plane.size()); }
};

/// Build the grid for T (EquiToCube), T^-1 (CubeToEqui) or R (Rotate, equirect to
/// equirect). `rotation` is only read for Rotate.
SamplingGrid build_grid(GridKind kind, Layout src, Layout dst, Rotation rotation = {});

/// Grid data lowered to four weighted taps per destination pixel.
struct TapTable {
  Layout src;
  Layout dst;
  std::vector<std::array<std::int32_t, 4>> index;  // into one sample's plane stack
  std::vector<std::array<double, 4>> weight;
  std::vector<std::uint8_t> valid;
};

TapTable make_taps(const SamplingGrid& grid, Interp mode);

/// Applies taps to every sample and channel of `src` (laid out as (N*planes, C, rows, cols)).
/// Invalid destinations are zero.
TensorD resample(const TensorD& src, const TapTable& taps);
TensorD resample(const TensorD& src, const SamplingGrid& grid, Interp mode = Interp::Bilinear);

/// Adjoint of resample: scatters `grad_out` into `grad_src` with the forward weights.
void resample_backward(const TapTable& taps, const TensorD& grad_out, TensorD& grad_src);

/// Circular column shift by eighths * W / 8 (content moves toward +col). Exact.
TensorD rotate_fast(const TensorD& img, int eighths);

/// Columns shifted circularly so out(c) = in(c - shift mod W).
TensorD roll_columns(const TensorD& img, int shift);

/// "DCGR" little-endian grid cache: magic, u32 version, u32 kind, u32 x6 layout
/// extents, u8 wrap, u32 count, then per entry u32 plane, f32 row, f32 col, u8 valid.
void save_grid(std::ostream& out, const SamplingGrid& grid);
SamplingGrid load_grid(std::istream& in);

}  // namespace dualcube
