#pragma once

// Analytic indoor scenes: an axis-aligned room with box and sphere furniture,
// ray cast from a camera inside the room.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dualcube/mask.hpp"

namespace dualcube {

struct BoxObject {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
  Eigen::Vector3d albedo;
};

struct SphereObject {
  Eigen::Vector3d center;
  double radius = 0.0;
  Eigen::Vector3d albedo;
};

struct SynthScene {
  std::uint64_t seed = 0;
  Eigen::Vector3d room{4.0, 3.0, 4.0};  // extents along x (width), y (height), z (depth); room spans [0, room]
  std::array<Eigen::Vector3d, 6> wall_albedo;  // -x, +x, -y (floor), +y (ceiling), -z, +z
  std::vector<BoxObject> boxes;
  std::vector<SphereObject> spheres;
  Eigen::Vector3d camera{2.0, 1.5, 2.0};

  void validate() const;
};

/// Room, furniture and camera drawn deterministically from `seed`. Every ray
/// distance lies in (0, 10] m.
SynthScene random_scene(std::uint64_t seed);

struct RayHit {
  double distance = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Eigen::Vector3d albedo = Eigen::Vector3d::Zero();
};

/// First hit along unit direction `dir` from the camera.
RayHit cast_ray(const SynthScene& scene, const Eigen::Vector3d& dir);

struct SceneRender {
  TensorD rgb;    // (1, 3, H, W) in [0, 1]
  TensorD depth;  // (1, 1, H, W) Euclidean ray distance in meters
  ValidMask mask;
};

SceneRender synth_scene(const SynthScene& scene, int width);

/// True where depth is finite and inside (lo, hi].
ValidMask filter_valid(const TensorD& depth, double lo = 0.0, double hi = 10.0);

}  // namespace dualcube
