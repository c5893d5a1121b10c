#include "primvote/datagen.hpp"

#include "primvote/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace primvote {

namespace {

constexpr double kMinT = 1e-9;
constexpr int kPlacementTries = 1000;
constexpr int kVisibilityAttempts = 10;
constexpr double kNoiseClip = 4.0;  // labeled points stay within 4 sigma of their surface

struct Roots {
  std::array<double, 2> t{};
  int count = 0;
  void push(double v) {
    if (v > kMinT) t[static_cast<std::size_t>(count++)] = v;
  }
  void sort() {
    if (count == 2 && t[1] < t[0]) std::swap(t[0], t[1]);
  }
};

// Roots of A t^2 + B t + C; degenerates to the linear case for A ~ 0.
void solve_quadratic(double a, double b, double c, Roots& roots) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) > 0.0) roots.push(-c / b);
    return;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  if (disc == 0.0) {
    roots.push(-b / (2.0 * a));
    return;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  roots.push(q / a);
  if (q != 0.0) roots.push(c / q);
}

// Parameters t > kMinT at which the ray meets the unbounded surface, ascending.
Roots surface_roots(const Vec3& o, const Vec3& d, const Primitive& primitive) {
  Roots roots;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Plane>) {
          const double denom = s.normal.dot(d);
          if (denom != 0.0) roots.push((s.offset - s.normal.dot(o)) / denom);
        } else if constexpr (std::is_same_v<T, Sphere>) {
          const Vec3 w = o - s.center;
          solve_quadratic(d.squaredNorm(), 2.0 * d.dot(w), w.squaredNorm() - s.radius * s.radius, roots);
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          const Vec3 w = o - s.foot;
          const Vec3 dp = d - d.dot(s.axis) * s.axis;
          const Vec3 wp = w - w.dot(s.axis) * s.axis;
          solve_quadratic(dp.squaredNorm(), 2.0 * dp.dot(wp), wp.squaredNorm() - s.radius * s.radius, roots);
        } else {
          const Vec3 w = o - s.apex;
          const double c2 = std::pow(std::cos(s.angle), 2);
          const double da = d.dot(s.axis), wa = w.dot(s.axis);
          Roots both;
          solve_quadratic(da * da - c2 * d.squaredNorm(), 2.0 * (da * wa - c2 * d.dot(w)),
                          wa * wa - c2 * w.squaredNorm(), both);
          // Drop the mirrored nappe.
          for (int i = 0; i < both.count; ++i)
            if (wa + both.t[static_cast<std::size_t>(i)] * da > 0.0) roots.push(both.t[static_cast<std::size_t>(i)]);
        }
      },
      primitive);
  roots.sort();
  return roots;
}

// A primitive with the finite extent it is rendered with.
struct Body {
  Primitive shape;
  Vec3 center;         // of the bounding sphere
  double bound = 0.0;  // bounding sphere radius
  double extent = 0.0; // disk radius, cylinder half height or cone length

  bool contains(const Vec3& x) const {
    return std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            return (x - center).squaredNorm() <= extent * extent;
          } else if constexpr (std::is_same_v<T, Sphere>) {
            return true;
          } else if constexpr (std::is_same_v<T, Cylinder>) {
            return std::abs((x - center).dot(s.axis)) <= extent;
          } else {
            const double h = (x - s.apex).dot(s.axis);
            return h >= 0.0 && h <= extent;
          }
        },
        shape);
  }
};

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.squaredNorm() < 1e-12);
  return v.normalized();
}

Body sample_body(PrimitiveType type, const SceneSpec& spec, Rng& rng) {
  const ParameterRanges& r = spec.ranges;
  const double L = r.scale;
  const Vec3 local(rng.uniform(r.box_x[0], r.box_x[1]) * L, rng.uniform(r.box_y[0], r.box_y[1]) * L,
                   rng.uniform(r.box_z[0], r.box_z[1]) * L);
  const Vec3 center = spec.camera.pose * local;
  Body b;
  b.center = center;
  switch (type) {
    case PrimitiveType::kPlane: {
      // Face the camera, no more than 60 degrees off the line of sight.
      const Vec3 to_camera = (spec.camera.origin() - center).normalized();
      Vec3 n;
      do {
        n = random_unit(rng);
        if (n.dot(to_camera) < 0.0) n = -n;
      } while (n.dot(to_camera) < 0.5);
      b.extent = rng.uniform(r.plane_radius_min, r.plane_radius_max) * L;
      b.bound = b.extent;
      b.shape = make_plane(n, center);
      break;
    }
    case PrimitiveType::kSphere: {
      const double radius = rng.uniform(r.radius_min, r.radius_max) * L;
      b.bound = radius;
      b.shape = Sphere{center, radius};
      break;
    }
    case PrimitiveType::kCylinder: {
      const double radius = rng.uniform(r.radius_min, r.radius_max) * L;
      const Vec3 axis = random_unit(rng);
      const double height = rng.uniform(r.height_min, r.height_max) * radius;
      b.extent = 0.5 * height;
      b.bound = std::hypot(radius, b.extent);
      b.shape = make_cylinder(axis, center, radius);
      break;
    }
    case PrimitiveType::kCone: {
      const double angle = rng.uniform(r.cone_angle_min, r.cone_angle_max);
      const double base = rng.uniform(r.radius_min, r.radius_max) * L;
      const Vec3 axis = random_unit(rng);
      const double length = base / std::tan(angle);
      b.extent = length;
      b.bound = std::hypot(0.5 * length, base);
      b.shape = make_cone(center - 0.5 * length * axis, axis, angle);
      break;
    }
  }
  return b;
}

bool overlaps(const Body& b, const std::vector<Body>& bodies, std::size_t skip) {
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    if (k == skip) continue;
    if ((b.center - bodies[k].center).norm() < b.bound + bodies[k].bound) return true;
  }
  return false;
}

Body place(PrimitiveType type, const SceneSpec& spec, Rng& rng, const std::vector<Body>& bodies,
           std::size_t skip) {
  Body b = sample_body(type, spec, rng);
  for (int tries = 1; tries < kPlacementTries && overlaps(b, bodies, skip); ++tries) b = sample_body(type, spec, rng);
  return b;
}

struct Pixel {
  Vec3 point;
  Vec3 normal;
  Vec3 ray;
  std::int32_t body = -1;
};

std::vector<Pixel> render(const Camera& camera, const std::vector<Body>& bodies) {
  std::vector<Pixel> hits;
  const Vec3 origin = camera.origin();
  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      const Vec3 d = camera.ray(col, row);
      Pixel best;
      double best_t = INFINITY;
      for (std::size_t k = 0; k < bodies.size(); ++k) {
        const Roots roots = surface_roots(origin, d, bodies[k].shape);
        for (int i = 0; i < roots.count; ++i) {
          const double t = roots.t[static_cast<std::size_t>(i)];
          if (t >= best_t) break;
          const Vec3 x = origin + t * d;
          if (!bodies[k].contains(x)) continue;
          const Vec3 n = surface_normal_at(x, bodies[k].shape).direction;
          // Back faces (seen through open ends) are not rendered.
          if (!(n.dot(d) < 0.0)) continue;
          best = Pixel{x, n, d, static_cast<std::int32_t>(k)};
          best_t = t;
          break;
        }
      }
      if (best.body >= 0) hits.push_back(best);
    }
  }
  return hits;
}

}  // namespace

Vec3 Camera::ray(int column, int row) const {
  const double f = 0.5 * static_cast<double>(height) / std::tan(0.5 * vertical_fov);
  const Vec3 local((column + 0.5 - 0.5 * width) / f, (row + 0.5 - 0.5 * height) / f, 1.0);
  return pose.linear() * local.normalized();
}

int SceneSpec::total() const {
  int sum = 0;
  for (int c : counts) sum += c;
  return sum;
}

void SceneSpec::validate() const {
  for (int c : counts)
    if (c < 0) throw std::invalid_argument("primitive counts must be non-negative");
  if (total() < 1 || total() > 20) throw std::invalid_argument("a scene holds between 1 and 20 primitives");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  if (!(normal_jitter >= 0.0)) throw std::invalid_argument("normal jitter must be non-negative");
  if (camera.width <= 0 || camera.height <= 0) throw std::invalid_argument("image size must be positive");
  if (static_cast<long long>(camera.width) * camera.height > 160000)
    throw std::invalid_argument("image resolution exceeds 160k points");
  if (!(camera.vertical_fov > 0.0 && camera.vertical_fov < M_PI))
    throw std::invalid_argument("field of view must lie in (0, pi)");
  const ParameterRanges& r = ranges;
  if (!(r.scale > 0.0)) throw std::invalid_argument("scene scale must be positive");
  if (!(r.radius_min > 0.0 && r.radius_min <= r.radius_max)) throw std::invalid_argument("invalid radius range");
  if (!(r.cone_angle_min > 0.0 && r.cone_angle_min <= r.cone_angle_max && r.cone_angle_max < M_PI / 2.0))
    throw std::invalid_argument("cone angles must lie in (0, pi/2)");
  if (!(r.height_min > 0.0 && r.height_min <= r.height_max)) throw std::invalid_argument("invalid height range");
  if (!(r.plane_radius_min > 0.0 && r.plane_radius_min <= r.plane_radius_max))
    throw std::invalid_argument("invalid plane radius range");
  if (!(r.box_z[0] > 0.0 && r.box_z[0] <= r.box_z[1] && r.box_x[0] <= r.box_x[1] && r.box_y[0] <= r.box_y[1]))
    throw std::invalid_argument("placement box must lie in front of the camera");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);

  std::vector<PrimitiveType> types;
  for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t)
    for (int i = 0; i < spec.counts[t]; ++i) types.push_back(static_cast<PrimitiveType>(t));
  std::vector<Body> bodies;
  for (PrimitiveType t : types) bodies.push_back(place(t, spec, rng, bodies, SIZE_MAX));

  std::vector<Pixel> pixels;
  for (int attempt = 0;; ++attempt) {
    pixels = render(spec.camera, bodies);
    std::vector<std::size_t> seen(bodies.size(), 0);
    for (const Pixel& p : pixels) ++seen[static_cast<std::size_t>(p.body)];
    bool all_visible = true;
    for (std::size_t k = 0; k < bodies.size(); ++k) {
      if (seen[k] > 0) continue;
      all_visible = false;
      if (attempt < kVisibilityAttempts) bodies[k] = place(types[k], spec, rng, bodies, k);
    }
    if (all_visible) break;
    if (attempt == kVisibilityAttempts) {
      // Drop what never became visible and renumber.
      std::vector<std::int32_t> remap(bodies.size(), -1);
      std::vector<Body> kept;
      for (std::size_t k = 0; k < bodies.size(); ++k) {
        if (seen[k] == 0) continue;
        remap[k] = static_cast<std::int32_t>(kept.size());
        kept.push_back(bodies[k]);
      }
      for (Pixel& p : pixels) p.body = remap[static_cast<std::size_t>(p.body)];
      bodies = std::move(kept);
      break;
    }
  }

  std::vector<OrientedPoint> exact;
  exact.reserve(pixels.size());
  for (const Pixel& p : pixels) exact.push_back({p.point, p.normal});
  const double ds = scene_diameter(exact);
  const double sigma = spec.noise_sigma * ds;

  Scene scene;
  scene.truth.noise_sigma = spec.noise_sigma;
  scene.truth.scene_diameter = ds;
  for (const Body& b : bodies) scene.truth.primitives.push_back(b.shape);
  std::vector<OrientedPoint> points;
  points.reserve(pixels.size());
  scene.truth.labels.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    OrientedPoint q{p.point, p.normal};
    if (sigma > 0.0) {
      // Depth noise along the viewing ray.
      double z;
      do {
        z = rng.normal();
      } while (std::abs(z) > kNoiseClip);
      q.position += sigma * z * (p.point - spec.camera.origin()).normalized();
    }
    if (spec.normal_jitter > 0.0) {
      Vec3 g(rng.normal(), rng.normal(), rng.normal());
      g -= g.dot(p.normal) * p.normal;
      q.normal = (p.normal + spec.normal_jitter * g).normalized();
    }
    points.push_back(q);
    scene.truth.labels.push_back(p.body);
  }
  scene.cloud = PointCloud(std::move(points));
  return scene;
}

std::optional<RayHit> intersect_ray(const Vec3& origin, const Vec3& direction, const Primitive& primitive) {
  const Roots roots = surface_roots(origin, direction, primitive);
  for (int i = 0; i < roots.count; ++i) {
    const double t = roots.t[static_cast<std::size_t>(i)];
    const Vec3 x = origin + t * direction;
    const Vec3 n = surface_normal_at(x, primitive).direction;
    if (n.dot(direction) < 0.0) return RayHit{t, x, n};
  }
  return std::nullopt;
}

}  // namespace primvote
