#pragma once

#include "primvote/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace primvote {

/// Pinhole depth camera. In camera coordinates it looks along +z with x to
/// the right and y down; `pose` maps camera to world coordinates.
struct Camera {
  int width = 400;
  int height = 400;
  double vertical_fov = 50.0 * M_PI / 180.0;
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();

  Vec3 origin() const { return pose.translation(); }
  /// Unit world-space ray through the center of pixel (column, row).
  Vec3 ray(int column, int row) const;
};

/// Sampling ranges, lengths in units of `scale`.
struct ParameterRanges {
  double scale = 1.0;
  double radius_min = 0.05;
  double radius_max = 0.2;
  double cone_angle_min = 15.0 * M_PI / 180.0;
  double cone_angle_max = 50.0 * M_PI / 180.0;
  double height_min = 2.0;  // cylinder height, in radii
  double height_max = 4.0;
  double plane_radius_min = 0.15;  // planes are rendered as disks
  double plane_radius_max = 0.35;
  // Placement box in camera coordinates.
  std::array<double, 2> box_x{-0.5, 0.5};
  std::array<double, 2> box_y{-0.5, 0.5};
  std::array<double, 2> box_z{1.6, 2.4};
};

struct SceneSpec {
  std::array<int, kPrimitiveTypeCount> counts{};  // indexed by PrimitiveType
  double noise_sigma = 0.0;   // fraction of the noiseless scene diameter
  double normal_jitter = 0.0; // radians, 0 keeps exact normals
  Camera camera;
  ParameterRanges ranges;
  std::uint64_t rng_seed = 0;

  int total() const;
  /// Throws std::invalid_argument when the spec cannot be rendered.
  void validate() const;
};

struct GroundTruth {
  std::vector<Primitive> primitives;
  std::vector<std::int32_t> labels;  // per point, index into primitives
  double noise_sigma = 0.0;
  double scene_diameter = 0.0;  // of the noiseless cloud
};

struct Scene {
  PointCloud cloud;
  GroundTruth truth;
};

Scene generate_scene(const SceneSpec& spec);

struct RayHit {
  double t = 0.0;
  Vec3 point;
  Vec3 normal;
};

/// Nearest front-facing intersection with t > 1e-9 of the unbounded surface.
std::optional<RayHit> intersect_ray(const Vec3& origin, const Vec3& direction, const Primitive& primitive);

}  // namespace primvote
