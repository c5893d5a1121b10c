#include "primvote/ppf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace primvote {
namespace {

constexpr double kParallelGuard = 1e-12;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

double linear_weight(double deviation, double eps) {
  return std::clamp(1.0 - std::abs(deviation) / eps, 0.0, 1.0);
}

double sine_part(double c1, double ck) { return std::sqrt(std::max(0.0, c1 - ck * ck)); }

// cos of the AS deviation, times C1.
double as_expression(const PairFeature& c) {
  const double s2 = sine_part(c.c1, c.c2);
  const double s3 = sine_part(c.c1, c.c3);
  return s2 * s3 - c.c2 * c.c3;
}

// cos of the VT deviation, times C1.
double vt_expression(const PairFeature& c) {
  const double s2 = sine_part(c.c1, c.c2);
  const double s3 = sine_part(c.c1, c.c3);
  const double s4 = std::sqrt(std::max(0.0, 1.0 - c.c4 * c.c4));
  return c.c2 * c.c3 * c.c4 + s2 * s3 * c.c4 + s2 * c.c3 * s4 - c.c2 * s3 * s4;
}

void check_angle(double angle) {
  if (!(angle > 0.0 && angle < M_PI / 2))
    throw std::invalid_argument("tolerance angles must lie in (0, pi/2)");
}

}  // namespace

Tolerances::Tolerances(double angle) : Tolerances(angle, angle, angle, angle) {}

Tolerances::Tolerances(double np, double pc, double as, double vt)
    : np_(np), pc_(pc), as_(as), vt_(vt) {
  for (double a : {np, pc, as, vt}) check_angle(a);
  cos_np_ = std::cos(np);
  sin2_pc_ = std::sin(pc) * std::sin(pc);
  cos_as_ = std::cos(as);
  cos_vt_ = std::cos(vt);
}

TangentFrame TangentFrame::from_normal(const Vec3& n_r) {
  // Rows of the minimal rotation R taking n_r to +x are R^T e_y and R^T e_z;
  // R^T e = e - v x e + v x (v x e) / (1 + c) with v = n_r x e_x, c = n_r . e_x.
  const Vec3 v = n_r.cross(Vec3::UnitX());
  const double c = n_r.x();
  Vec3 y;
  if (1.0 + c < 1e-12) {
    y = -Vec3::UnitY();  // rotation by pi about z
  } else {
    const Vec3 e = Vec3::UnitY();
    y = e - v.cross(e) + v.cross(v.cross(e)) / (1.0 + c);
  }
  y = (y - y.dot(n_r) * n_r).normalized();
  return TangentFrame{y, n_r.cross(y)};
}

Vec3 TangentFrame::axis_at(double phi) const {
  return std::cos(phi) * y_axis + std::sin(phi) * z_axis;
}

std::optional<PairFeature> compute_pair_feature(const Vec3& p_r, const Vec3& n_r, const Vec3& p_i,
                                                const Vec3& n_i) {
  const Vec3 d = p_i - p_r;
  const double c1 = d.squaredNorm();
  if (!(c1 > 0.0)) return std::nullopt;
  return PairFeature{c1, n_r.dot(d), n_i.dot(d), n_r.dot(n_i)};
}

bool check_np(const PairFeature& c, const Tolerances& tol) { return c.c4 > tol.cos_np(); }

bool check_pc(const PairFeature& c, const Tolerances& tol) {
  const double bound = tol.sin2_pc() * c.c1;
  return c.c2 * c.c2 < bound && c.c3 * c.c3 < bound;
}

bool check_as(const PairFeature& c, const Tolerances& tol) {
  return as_expression(c) > tol.cos_as() * c.c1;
}

bool check_vt(const PairFeature& c, const Tolerances& tol) {
  return vt_expression(c) > tol.cos_vt() * c.c1;
}

double constraint_weight_np(const PairFeature& c, const Tolerances& tol) {
  return linear_weight(std::acos(clamp_unit(c.c4)), tol.np());
}

double constraint_weight_pc(const PairFeature& c, const Tolerances& tol) {
  // |F_k - pi/2| = acos(sin F_k) = acos(S_k / F1)
  const double f1 = std::sqrt(c.c1);
  const double dev2 = std::acos(clamp_unit(sine_part(c.c1, c.c2) / f1));
  const double dev3 = std::acos(clamp_unit(sine_part(c.c1, c.c3) / f1));
  return linear_weight(dev2, tol.pc()) * linear_weight(dev3, tol.pc());
}

double constraint_weight_as(const PairFeature& c, const Tolerances& tol) {
  return linear_weight(std::acos(clamp_unit(as_expression(c) / c.c1)), tol.as());
}

double constraint_weight_vt(const PairFeature& c, const Tolerances& tol) {
  return linear_weight(std::acos(clamp_unit(vt_expression(c) / c.c1)), tol.vt());
}

std::optional<double> sphere_radius(const PairFeature& c) {
  if (c.c4 >= 1.0 - kParallelGuard) return std::nullopt;
  return (c.c2 - c.c3) / (2.0 * (c.c4 - 1.0));
}

std::optional<CylinderVote> cylinder_vote(const TangentFrame& frame, const Vec3& n_r, const Vec3& n_i,
                                          const PairFeature& c) {
  const auto radius = sphere_radius(c);
  if (!radius || !(*radius > 0.0)) return std::nullopt;
  const Vec3 axis = n_r.cross(n_i);
  if (axis.squaredNorm() < 1e-24) return std::nullopt;
  double phi = std::atan2(axis.dot(frame.z_axis), axis.dot(frame.y_axis));
  if (phi < 0.0) phi += M_PI;
  if (phi >= M_PI) phi -= M_PI;
  return CylinderVote{*radius, phi};
}

std::optional<CylinderVote> cylinder_vote(const Vec3& /*p_r*/, const Vec3& n_r, const Vec3& /*p_i*/,
                                          const Vec3& n_i, const PairFeature& c) {
  return cylinder_vote(TangentFrame::from_normal(n_r), n_r, n_i, c);
}

std::optional<ConeVote> cone_vote(const Vec3& p_r, const Vec3& n_r, const Vec3& p_i, const Vec3& n_i,
                                  const PairFeature& c, const VoteLimits& limits) {
  if (c.c4 >= 1.0 - kParallelGuard) return std::nullopt;
  const double s_r = c.c3 / (1.0 - c.c4);
  if (!(s_r > 0.0)) return std::nullopt;
  if (limits.max_parameter > 0.0 && s_r > limits.max_parameter) return std::nullopt;
  // q_i - q_r = d - (C3 n_r + C2 n_i) / (C4 - 1)
  const Vec3 diff = (p_i - p_r) - (c.c3 * n_r + c.c2 * n_i) / (c.c4 - 1.0);
  const double separation = diff.norm();
  const double min_sep = limits.min_axis_separation > 0.0 ? limits.min_axis_separation : 1e-12;
  if (!(separation >= min_sep)) return std::nullopt;
  return ConeVote{s_r, canonical_hemisphere(diff / separation)};
}

std::optional<Cone> extract_cone(double s_r, const Vec3& axis, const Vec3& p_r, const Vec3& n_r) {
  const double denom = axis.dot(n_r);
  if (std::abs(denom) <= 1e-9) return std::nullopt;
  const Vec3 apex = p_r + s_r * (axis / denom - n_r);
  const double side = (p_r - apex).dot(axis);
  if (side == 0.0) return std::nullopt;
  const Vec3 a = side > 0.0 ? axis : Vec3(-axis);
  const double sin_theta = -a.dot(n_r);
  if (!(sin_theta > 0.0 && sin_theta < 1.0)) return std::nullopt;
  return Cone{apex, a, std::asin(sin_theta)};
}

Vec3 canonical_hemisphere(const Vec3& v) {
  if (v.z() > 0.0) return v;
  if (v.z() < 0.0) return -v;
  if (v.y() > 0.0) return v;
  if (v.y() < 0.0) return -v;
  return v.x() >= 0.0 ? v : Vec3(-v);
}

}  // namespace primvote
