#include "dualcube/scene.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dualcube/error.hpp"
#include "dualcube/sphere_geom.hpp"

namespace dualcube {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool inside_box(const BoxObject& b, const Eigen::Vector3d& p, double margin) {
  return (p.array() > b.min.array() - margin).all() && (p.array() < b.max.array() + margin).all();
}

// Entry distance of a ray starting outside the box.
std::optional<RayHit> hit_box(const BoxObject& b, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t_near = -kInf, t_far = kInf;
  int axis = -1;
  double axis_sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (b.min[a] - o[a]) / d[a];
    double t1 = (b.max[a] - o[a]) / d[a];
    double s = -1.0;  // normal of the face hit at t0
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
      axis_sign = s;
    }
    t_far = std::min(t_far, t1);
  }
  if (axis < 0 || t_near > t_far || t_near <= 0.0) return std::nullopt;
  RayHit h;
  h.distance = t_near;
  h.normal[axis] = axis_sign;
  h.albedo = b.albedo;
  return h;
}

std::optional<RayHit> hit_sphere(const SphereObject& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t <= 0.0) return std::nullopt;
  RayHit h;
  h.distance = t;
  h.normal = (o + t * d - s.center) / s.radius;
  h.albedo = s.albedo;
  return h;
}

}  // namespace

void SynthScene::validate() const {
  if (!((room.array() > 0.0).all())) throw ConfigError("scene: room extents must be positive");
  if (!((camera.array() > 0.0).all() && (camera.array() < room.array()).all())) {
    throw ConfigError("scene: camera must lie strictly inside the room");
  }
  for (const BoxObject& b : boxes) {
    if (inside_box(b, camera, 0.0)) throw ConfigError("scene: camera inside a box object");
  }
  for (const SphereObject& s : spheres) {
    if ((camera - s.center).norm() <= s.radius) throw ConfigError("scene: camera inside a sphere object");
  }
}

SynthScene random_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto color = [&] { return Eigen::Vector3d(uni(0.2, 0.9), uni(0.2, 0.9), uni(0.2, 0.9)); };

  SynthScene s;
  s.seed = seed;
  // Longest diagonal stays below sqrt(6.5^2 + 6.5^2 + 3.2^2) < 10 m.
  s.room = Eigen::Vector3d(uni(3.0, 6.5), uni(2.4, 3.2), uni(3.0, 6.5));
  for (auto& a : s.wall_albedo) a = color();
  s.camera = Eigen::Vector3d(uni(0.3, 0.7) * s.room.x(), uni(1.2, 1.8), uni(0.3, 0.7) * s.room.z());

  const int box_count = int(uni(1.0, 4.0));
  for (int i = 0; i < box_count; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const Eigen::Vector3d size(uni(0.4, 1.2), uni(0.4, 1.2), uni(0.4, 1.2));
      const Eigen::Vector3d lo(uni(0.0, s.room.x() - size.x()), 0.0, uni(0.0, s.room.z() - size.z()));
      BoxObject b{lo, lo + size, color()};
      if (inside_box(b, s.camera, 0.3)) continue;
      s.boxes.push_back(b);
      break;
    }
  }
  const int sphere_count = int(uni(0.0, 3.0));
  for (int i = 0; i < sphere_count; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double r = uni(0.2, 0.5);
      const Eigen::Vector3d c(uni(r, s.room.x() - r), uni(r, s.room.y() - r), uni(r, s.room.z() - r));
      if ((c - s.camera).norm() < r + 0.3) continue;
      s.spheres.push_back({c, r, color()});
      break;
    }
  }
  s.validate();
  return s;
}

RayHit cast_ray(const SynthScene& scene, const Eigen::Vector3d& dir) {
  const Eigen::Vector3d& o = scene.camera;
  // Exit through the room walls.
  RayHit best;
  best.distance = kInf;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const bool positive = dir[a] > 0.0;
    const double t = ((positive ? scene.room[a] : 0.0) - o[a]) / dir[a];
    if (t < best.distance) {
      best.distance = t;
      best.normal = Eigen::Vector3d::Zero();
      best.normal[a] = positive ? -1.0 : 1.0;
      best.albedo = scene.wall_albedo[std::size_t(2 * a + (positive ? 1 : 0))];
    }
  }
  for (const BoxObject& b : scene.boxes) {
    if (auto h = hit_box(b, o, dir); h && h->distance < best.distance) best = *h;
  }
  for (const SphereObject& s : scene.spheres) {
    if (auto h = hit_sphere(s, o, dir); h && h->distance < best.distance) best = *h;
  }
  return best;
}

SceneRender synth_scene(const SynthScene& scene, int width) {
  if (width <= 0 || width % 8 != 0) throw DimensionError("synth_scene: width must be a positive multiple of 8");
  scene.validate();
  const int height = width / 2;
  SceneRender r;
  r.rgb = TensorD(Shape{1, 3, height, width});
  r.depth = TensorD(Shape{1, 1, height, width});
  constexpr double ambient = 0.15;
  constexpr double falloff_ref = 1.5;  // meters at which the headlight is unattenuated
  constexpr double texture_period = 0.5;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d d = pixel_to_direction((x + 0.5) / width, (y + 0.5) / height);
      const RayHit h = cast_ray(scene, d);
      r.depth(0, 0, y, x) = h.distance;
      // Headlight at the camera: Lambert term with inverse-square falloff, over a
      // world-space sinusoidal texture.
      const Eigen::Vector3d p = scene.camera + h.distance * d;
      const Eigen::Array3d phase = (2.0 * std::numbers::pi / texture_period) * p.array();
      const double texture = 1.0 + 0.2 * std::cos(phase[0]) * std::cos(phase[1]) * std::cos(phase[2]);
      const double lambert = std::abs(h.normal.dot(d));
      const double falloff = std::min(1.0, (falloff_ref / h.distance) * (falloff_ref / h.distance));
      const Eigen::Vector3d c =
          (h.albedo * texture * (ambient + (1.0 - ambient) * lambert * falloff)).cwiseMin(1.0);
      for (int ch = 0; ch < 3; ++ch) r.rgb(0, ch, y, x) = c[ch];
    }
  }
  r.mask = filter_valid(r.depth);
  return r;
}

ValidMask filter_valid(const TensorD& depth, double lo, double hi) {
  ValidMask m{depth.shape(), std::vector<std::uint8_t>(std::size_t(depth.size()), 0)};
  for (Index i = 0; i < depth.size(); ++i) {
    const double v = depth[i];
    m.valid[std::size_t(i)] = std::isfinite(v) && v > lo && v <= hi;
  }
  return m;
}

}  // namespace dualcube
