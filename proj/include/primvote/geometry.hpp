#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace primvote {

using Vec3 = Eigen::Vector3d;

struct OrientedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

/// Axis-aligned bounding-box diagonal of the positions; 0 for a single point.
double scene_diameter(std::span<const OrientedPoint> points);

/// Oriented points plus the cached scene diameter d_s.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<OrientedPoint> points);

  std::span<const OrientedPoint> points() const { return points_; }
  const OrientedPoint& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double diameter() const { return diameter_; }

 private:
  std::vector<OrientedPoint> points_;
  double diameter_ = 0.0;
};

struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // normal . p - offset == 0 on the plane
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct Cylinder {
  Vec3 axis = Vec3::UnitZ();  // canonical sign, see canonical_axis()
  Vec3 foot = Vec3::Zero();   // axis point closest to the origin
  double radius = 1.0;
};

struct Cone {
  Vec3 apex = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // points from the apex into the cone
  double angle = 0.0;         // half opening angle, (0, pi/2)
};

using Primitive = std::variant<Plane, Sphere, Cylinder, Cone>;

enum class PrimitiveType { kPlane = 0, kSphere = 1, kCylinder = 2, kCone = 3 };
inline constexpr std::size_t kPrimitiveTypeCount = 4;

PrimitiveType type_of(const Primitive& primitive);
std::string_view type_name(PrimitiveType type);
/// Inverse of type_name(); throws std::invalid_argument on unknown names.
PrimitiveType parse_type_name(std::string_view name);

// Constructors that establish the type invariants.
Plane make_plane(const Vec3& normal, const Vec3& point_on_plane);
Cylinder make_cylinder(const Vec3& axis, const Vec3& point_on_axis, double radius);
Cone make_cone(const Vec3& apex, const Vec3& axis, double angle);

/// Flips v so that its largest-magnitude component is positive.
Vec3 canonical_axis(const Vec3& v);

/// Throws std::invalid_argument if the variant's invariants do not hold.
void validate(const Primitive& primitive);

/// Signed orthogonal distance, positive on the outward-normal side.
double signed_distance(const Vec3& p, const Primitive& primitive);

/// Closest point on the (unbounded) surface.
Vec3 project(const Vec3& p, const Primitive& primitive);

struct SurfaceNormal {
  Vec3 direction;
  bool singular = false;  // p sat on a gradient singularity; direction is a fallback
};

/// Outward unit gradient of signed_distance at p.
SurfaceNormal surface_normal_at(const Vec3& p, const Primitive& primitive);

/// Applies a rigid transform to the primitive.
Primitive transformed(const Primitive& primitive, const Eigen::Isometry3d& pose);

/// Unit vector orthogonal to axis, preferring +x, then +y, then +z projected
/// into the orthogonal complement. Used wherever a radial direction vanishes.
Vec3 fallback_radial(const Vec3& axis);

}  // namespace primvote
