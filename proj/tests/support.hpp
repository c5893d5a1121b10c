#pragma once

#include "primvote/geometry.hpp"
#include "primvote/ppf.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace primvote::testing {

// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>()(engine_); }

  Vec3 vec(double scale) { return {uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)}; }

  Vec3 unit() {
    for (;;) {
      const Vec3 v(normal(), normal(), normal());
      if (v.norm() > 1e-6) return v.normalized();
    }
  }

  // Unit vector orthogonal to `a`.
  Vec3 unit_orthogonal(const Vec3& a) {
    for (;;) {
      Vec3 v = unit();
      v -= v.dot(a) * a;
      if (v.norm() > 1e-3) return v.normalized();
    }
  }

  Eigen::Isometry3d pose(double translation) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = Eigen::AngleAxisd(uniform(0.0, 2.0 * M_PI), unit()).toRotationMatrix();
    t.translation() = vec(translation);
    return t;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct ExactPair {
  OrientedPoint r;
  OrientedPoint i;
};

inline PairFeature feature(const ExactPair& p) {
  return *compute_pair_feature(p.r.position, p.r.normal, p.i.position, p.i.normal);
}

// Angle form of a pair feature: F2 = angle(n_r, d), F3 = angle(n_i, d), F4 = angle(n_r, n_i).
struct AngleFeature {
  double f1, f2, f3, f4;
};

inline AngleFeature angles(const ExactPair& p) {
  const Vec3 d = p.i.position - p.r.position;
  const Vec3 u = d.normalized();
  auto ang = [](const Vec3& a, const Vec3& b) { return std::acos(std::clamp(a.dot(b), -1.0, 1.0)); };
  return {d.norm(), ang(p.r.normal, u), ang(p.i.normal, u), ang(p.r.normal, p.i.normal)};
}

// Pair with |d| = f1, angle(n_r, d) = f2, angle(n_i, d) = f3 and the normals'
// azimuths around d differing by psi, so cos F4 = cos f2 cos f3 + sin f2 sin f3 cos psi.
inline ExactPair pair_from_angles(double f1, double f2, double f3, double psi) {
  const Vec3 n_r(std::cos(f2), std::sin(f2), 0.0);
  const Vec3 n_i(std::cos(f3), std::sin(f3) * std::cos(psi), std::sin(f3) * std::sin(psi));
  return {{Vec3::Zero(), n_r}, {Vec3(f1, 0.0, 0.0), n_i}};
}

inline ExactPair transformed(const ExactPair& p, const Eigen::Isometry3d& pose) {
  return {{pose * p.r.position, pose.linear() * p.r.normal}, {pose * p.i.position, pose.linear() * p.i.normal}};
}

inline OrientedPoint on_sphere(const Sphere& s, const Vec3& direction) {
  return {s.center + s.radius * direction, direction};
}

// Point at `height` along the axis and azimuth `phi` around it.
inline OrientedPoint on_cylinder(const Cylinder& c, double height, double phi) {
  const Vec3 u = fallback_radial(c.axis);
  const Vec3 v = c.axis.cross(u);
  const Vec3 radial = std::cos(phi) * u + std::sin(phi) * v;
  return {c.foot + height * c.axis + c.radius * radial, radial};
}

// Point at axial distance `height` > 0 from the apex.
inline OrientedPoint on_cone(const Cone& k, double height, double phi) {
  const Vec3 u = fallback_radial(k.axis);
  const Vec3 v = k.axis.cross(u);
  const Vec3 radial = std::cos(phi) * u + std::sin(phi) * v;
  const Vec3 p = k.apex + height * k.axis + height * std::tan(k.angle) * radial;
  const Vec3 n = std::cos(k.angle) * radial - std::sin(k.angle) * k.axis;
  return {p, n};
}

inline Sphere random_sphere(Gen& g) { return {g.vec(5.0), g.uniform(0.1, 10.0)}; }

inline Cylinder random_cylinder(Gen& g) { return make_cylinder(g.unit(), g.vec(5.0), g.uniform(0.1, 10.0)); }

inline Cone random_cone(Gen& g) {
  return make_cone(g.vec(5.0), g.unit(), g.uniform(5.0, 80.0) * M_PI / 180.0);
}

inline ExactPair sphere_pair(Gen& g, const Sphere& s) {
  for (;;) {
    ExactPair p{on_sphere(s, g.unit()), on_sphere(s, g.unit())};
    // Nearly identical or antipodal normals make the radius ill-conditioned.
    if (std::abs(p.r.normal.dot(p.i.normal)) < 0.99) return p;
  }
}

inline ExactPair cylinder_pair(Gen& g, const Cylinder& c) {
  for (;;) {
    ExactPair p{on_cylinder(c, g.uniform(-3.0, 3.0), g.uniform(0.0, 2.0 * M_PI)),
                on_cylinder(c, g.uniform(-3.0, 3.0), g.uniform(0.0, 2.0 * M_PI))};
    if (std::abs(p.r.normal.dot(p.i.normal)) < 0.99) return p;
  }
}

inline ExactPair cone_pair(Gen& g, const Cone& k) {
  for (;;) {
    ExactPair p{on_cone(k, g.uniform(0.5, 5.0), g.uniform(0.0, 2.0 * M_PI)),
                on_cone(k, g.uniform(0.5, 5.0), g.uniform(0.0, 2.0 * M_PI))};
    // Keep pairs whose normals are well separated and whose heights differ.
    const double hr = (p.r.position - k.apex).dot(k.axis);
    const double hi = (p.i.position - k.apex).dot(k.axis);
    if (p.r.normal.dot(p.i.normal) < 0.99 && std::abs(hr - hi) > 0.05) return p;
  }
}

inline ExactPair plane_pair(Gen& g) {
  const Vec3 n = g.unit();
  const Vec3 o = g.vec(5.0);
  const Vec3 a = g.unit_orthogonal(n);
  const Vec3 b = n.cross(a);
  auto point = [&] { return OrientedPoint{o + g.uniform(-3.0, 3.0) * a + g.uniform(-3.0, 3.0) * b, n}; };
  return {point(), point()};
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("primvote_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace primvote::testing
