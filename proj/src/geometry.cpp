#include "primvote/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace primvote {
namespace {

constexpr double kSingular = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Cone quantities in the (axial, radial) half-plane through p.
struct ConeFrame {
  Vec3 offset;   // p - apex
  double height; // along the axis
  Vec3 radial;   // unit radial direction (fallback when on the axis)
  double radius; // distance to the axis
  double along;  // projection onto the slant line; <= 0 behind the apex
};

ConeFrame cone_frame(const Vec3& p, const Cone& cone) {
  ConeFrame f;
  f.offset = p - cone.apex;
  f.height = cone.axis.dot(f.offset);
  const Vec3 radial = f.offset - f.height * cone.axis;
  f.radius = radial.norm();
  f.radial = f.radius > kSingular ? Vec3(radial / f.radius) : fallback_radial(cone.axis);
  f.along = f.height * std::cos(cone.angle) + f.radius * std::sin(cone.angle);
  return f;
}

}  // namespace

double scene_diameter(std::span<const OrientedPoint> points) {
  if (points.empty()) return 0.0;
  Vec3 lo = points.front().position;
  Vec3 hi = lo;
  for (const auto& pt : points) {
    lo = lo.cwiseMin(pt.position);
    hi = hi.cwiseMax(pt.position);
  }
  return (hi - lo).norm();
}

PointCloud::PointCloud(std::vector<OrientedPoint> points)
    : points_(std::move(points)), diameter_(scene_diameter(points_)) {}

PrimitiveType type_of(const Primitive& primitive) {
  return static_cast<PrimitiveType>(primitive.index());
}

std::string_view type_name(PrimitiveType type) {
  switch (type) {
    case PrimitiveType::kPlane: return "plane";
    case PrimitiveType::kSphere: return "sphere";
    case PrimitiveType::kCylinder: return "cylinder";
    case PrimitiveType::kCone: return "cone";
  }
  return "unknown";
}

PrimitiveType parse_type_name(std::string_view name) {
  for (std::size_t i = 0; i < kPrimitiveTypeCount; ++i) {
    const auto type = static_cast<PrimitiveType>(i);
    if (type_name(type) == name) return type;
  }
  throw std::invalid_argument("unknown primitive type '" + std::string(name) + "'");
}

Vec3 canonical_axis(const Vec3& v) {
  Eigen::Index largest = 0;
  v.cwiseAbs().maxCoeff(&largest);
  return v[largest] < 0.0 ? Vec3(-v) : v;
}

Vec3 fallback_radial(const Vec3& axis) {
  for (int i = 0; i < 3; ++i) {
    const Vec3 candidate = Vec3::Unit(i) - axis.dot(Vec3::Unit(i)) * axis;
    const double n = candidate.norm();
    if (n > 1e-6) return candidate / n;
  }
  return Vec3::UnitX();
}

Plane make_plane(const Vec3& normal, const Vec3& point_on_plane) {
  const Vec3 n = normal.normalized();
  return Plane{n, n.dot(point_on_plane)};
}

Cylinder make_cylinder(const Vec3& axis, const Vec3& point_on_axis, double radius) {
  const Vec3 a = canonical_axis(axis.normalized());
  return Cylinder{a, point_on_axis - a.dot(point_on_axis) * a, radius};
}

Cone make_cone(const Vec3& apex, const Vec3& axis, double angle) {
  return Cone{apex, axis.normalized(), angle};
}

void validate(const Primitive& primitive) {
  auto unit = [](const Vec3& v) { return v.allFinite() && std::abs(v.norm() - 1.0) <= 1e-6; };
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  std::visit(Overloaded{
                 [&](const Plane& p) {
                   if (!unit(p.normal) || !std::isfinite(p.offset)) fail("plane: normal must be unit");
                 },
                 [&](const Sphere& s) {
                   if (!s.center.allFinite() || !(s.radius > 0.0) || !std::isfinite(s.radius))
                     fail("sphere: radius must be positive");
                 },
                 [&](const Cylinder& c) {
                   if (!unit(c.axis)) fail("cylinder: axis must be unit");
                   if (!c.foot.allFinite() || std::abs(c.foot.dot(c.axis)) > 1e-6 * (1.0 + c.foot.norm()))
                     fail("cylinder: foot must be orthogonal to the axis");
                   if (!(c.radius > 0.0) || !std::isfinite(c.radius)) fail("cylinder: radius must be positive");
                 },
                 [&](const Cone& c) {
                   if (!unit(c.axis) || !c.apex.allFinite()) fail("cone: axis must be unit");
                   if (!(c.angle > 0.0 && c.angle < M_PI / 2)) fail("cone: angle must be in (0, pi/2)");
                 },
             },
             primitive);
}

double signed_distance(const Vec3& p, const Primitive& primitive) {
  return std::visit(
      Overloaded{
          [&](const Plane& pl) { return pl.normal.dot(p) - pl.offset; },
          [&](const Sphere& s) { return (p - s.center).norm() - s.radius; },
          [&](const Cylinder& c) {
            const Vec3 v = p - c.foot;
            return (v - c.axis.dot(v) * c.axis).norm() - c.radius;
          },
          [&](const Cone& c) {
            const ConeFrame f = cone_frame(p, c);
            if (f.along <= 0.0) return f.offset.norm();
            return f.radius * std::cos(c.angle) - f.height * std::sin(c.angle);
          },
      },
      primitive);
}

Vec3 project(const Vec3& p, const Primitive& primitive) {
  return std::visit(
      Overloaded{
          [&](const Plane& pl) -> Vec3 { return p - signed_distance(p, pl) * pl.normal; },
          [&](const Sphere& s) -> Vec3 {
            const Vec3 v = p - s.center;
            const double n = v.norm();
            const Vec3 dir = n > kSingular ? Vec3(v / n) : Vec3::UnitX();
            return s.center + s.radius * dir;
          },
          [&](const Cylinder& c) -> Vec3 {
            const Vec3 v = p - c.foot;
            const double h = c.axis.dot(v);
            const Vec3 radial = v - h * c.axis;
            const double r = radial.norm();
            const Vec3 dir = r > kSingular ? Vec3(radial / r) : fallback_radial(c.axis);
            return c.foot + h * c.axis + c.radius * dir;
          },
          [&](const Cone& c) -> Vec3 {
            const ConeFrame f = cone_frame(p, c);
            if (f.along <= 0.0) return c.apex;
            const Vec3 slant = std::cos(c.angle) * c.axis + std::sin(c.angle) * f.radial;
            return c.apex + f.along * slant;
          },
      },
      primitive);
}

SurfaceNormal surface_normal_at(const Vec3& p, const Primitive& primitive) {
  return std::visit(
      Overloaded{
          [&](const Plane& pl) { return SurfaceNormal{pl.normal, false}; },
          [&](const Sphere& s) {
            const Vec3 v = p - s.center;
            const double n = v.norm();
            if (n <= kSingular) return SurfaceNormal{Vec3::UnitX(), true};
            return SurfaceNormal{v / n, false};
          },
          [&](const Cylinder& c) {
            const Vec3 v = p - c.foot;
            const Vec3 radial = v - c.axis.dot(v) * c.axis;
            const double r = radial.norm();
            if (r <= kSingular) return SurfaceNormal{fallback_radial(c.axis), true};
            return SurfaceNormal{radial / r, false};
          },
          [&](const Cone& c) {
            const ConeFrame f = cone_frame(p, c);
            if (f.along <= 0.0) {
              const double n = f.offset.norm();
              if (n <= kSingular) return SurfaceNormal{-c.axis, true};
              return SurfaceNormal{f.offset / n, false};
            }
            const Vec3 normal = std::cos(c.angle) * f.radial - std::sin(c.angle) * c.axis;
            return SurfaceNormal{normal, f.radius <= kSingular};
          },
      },
      primitive);
}

Primitive transformed(const Primitive& primitive, const Eigen::Isometry3d& pose) {
  const Eigen::Matrix3d rot = pose.linear();
  return std::visit(
      Overloaded{
          [&](const Plane& pl) -> Primitive {
            return make_plane(rot * pl.normal, pose * Vec3(pl.offset * pl.normal));
          },
          [&](const Sphere& s) -> Primitive { return Sphere{pose * s.center, s.radius}; },
          [&](const Cylinder& c) -> Primitive {
            return make_cylinder(rot * c.axis, pose * c.foot, c.radius);
          },
          [&](const Cone& c) -> Primitive { return Cone{pose * c.apex, rot * c.axis, c.angle}; },
      },
      primitive);
}

}  // namespace primvote
