#pragma once

#include "primvote/geometry.hpp"

#include <optional>

namespace primvote {

/// Trig-free pair feature (|d|^2, n_r.d, n_i.d, n_r.n_i) with d = p_i - p_r.
struct PairFeature {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

/// Angular tolerances for the relaxed voting conditions, with the cosines and
/// squared sines precomputed so the per-pair checks need no trigonometry.
class Tolerances {
 public:
  /// All four tolerances equal to `angle` (radians).
  explicit Tolerances(double angle = kDefaultAngle);
  Tolerances(double np, double pc, double as, double vt);

  double np() const { return np_; }
  double pc() const { return pc_; }
  double as() const { return as_; }
  double vt() const { return vt_; }

  double cos_np() const { return cos_np_; }
  double sin2_pc() const { return sin2_pc_; }
  double cos_as() const { return cos_as_; }
  double cos_vt() const { return cos_vt_; }

  static constexpr double kDefaultAngle = M_PI / 18.0;  // 10 degrees

 private:
  double np_, pc_, as_, vt_;
  double cos_np_, sin2_pc_, cos_as_, cos_vt_;
};

struct CylinderVote {
  double radius = 0.0;
  double angle = 0.0;  // [0, pi), in the reference tangent frame
};

struct ConeVote {
  double s_r = 0.0;  // distance from p_r to the axis along -n_r
  Vec3 axis = Vec3::UnitZ();  // canonical hemisphere (see canonical_hemisphere)
};

/// Bounds applied to closed-form votes before they reach an accumulator.
struct VoteLimits {
  double max_parameter = 0.0;      // radius / s_r range upper bound
  double min_axis_separation = 0.0;  // |q_i - q_r| below this is an equal-height pair
};

/// Tangent frame of a reference point: rows 2 and 3 of the minimal rotation
/// R_x that takes n_r to +x. Cylinder angles are measured in this frame.
struct TangentFrame {
  Vec3 y_axis;
  Vec3 z_axis;

  static TangentFrame from_normal(const Vec3& n_r);
  /// Axis direction for an angle phi: ((0, cos phi, sin phi) R_x)^T.
  Vec3 axis_at(double phi) const;
};

/// Returns nullopt for coincident points.
std::optional<PairFeature> compute_pair_feature(const Vec3& p_r, const Vec3& n_r, const Vec3& p_i,
                                                const Vec3& n_i);

inline bool convexity_admissible(const PairFeature& c) { return c.c2 <= 0.0 && c.c3 >= 0.0; }

// Relaxed voting conditions evaluated on C directly.
bool check_np(const PairFeature& c, const Tolerances& tol);
bool check_pc(const PairFeature& c, const Tolerances& tol);
bool check_as(const PairFeature& c, const Tolerances& tol);
bool check_vt(const PairFeature& c, const Tolerances& tol);

// Constraint weights 1 - |deviation| / eps, clamped to [0, 1]. The deviation
// angle is recovered with one acos per constraint.
double constraint_weight_np(const PairFeature& c, const Tolerances& tol);
/// Product of the two coplanarity factors (deviation of F2 and of F3 from pi/2).
double constraint_weight_pc(const PairFeature& c, const Tolerances& tol);
double constraint_weight_as(const PairFeature& c, const Tolerances& tol);
double constraint_weight_vt(const PairFeature& c, const Tolerances& tol);

/// R = (C2 - C3) / (2 (C4 - 1)); nullopt for (numerically) parallel normals.
std::optional<double> sphere_radius(const PairFeature& c);

std::optional<CylinderVote> cylinder_vote(const TangentFrame& frame, const Vec3& n_r, const Vec3& n_i,
                                          const PairFeature& c);
std::optional<CylinderVote> cylinder_vote(const Vec3& p_r, const Vec3& n_r, const Vec3& p_i,
                                          const Vec3& n_i, const PairFeature& c);

std::optional<ConeVote> cone_vote(const Vec3& p_r, const Vec3& n_r, const Vec3& p_i, const Vec3& n_i,
                                  const PairFeature& c, const VoteLimits& limits);

/// Cone from the winning (s_r, axis) of a reference point. nullopt when the
/// axis lies in the tangent plane or the opening angle leaves (0, pi/2).
std::optional<Cone> extract_cone(double s_r, const Vec3& axis, const Vec3& p_r, const Vec3& n_r);

/// Maps v or -v into the closed upper hemisphere (z > 0, ties broken on y then x).
Vec3 canonical_hemisphere(const Vec3& v);

}  // namespace primvote
