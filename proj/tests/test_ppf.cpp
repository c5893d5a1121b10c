#include "primvote/ppf.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace primvote {
namespace {

using testing::Deviations;
using testing::ExactPair;
using testing::Gen;
using testing::deviations;
using testing::perturbed;
using testing::random_pair;

constexpr double kDeg = M_PI / 180.0;
const double kH = std::sqrt(0.5);

TEST(PairFeature, Examples) {
  auto c = compute_pair_feature({0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 0, 1});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->c1, 1.0);
  EXPECT_EQ(c->c2, 0.0);
  EXPECT_EQ(c->c3, 0.0);
  EXPECT_EQ(c->c4, 1.0);

  c = compute_pair_feature({1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 1, 0});
  EXPECT_EQ(c->c1, 2.0);
  EXPECT_EQ(c->c2, -1.0);
  EXPECT_EQ(c->c3, 1.0);
  EXPECT_EQ(c->c4, 0.0);

  c = compute_pair_feature({1, 0, 0}, {1, 0, 0}, {1, 0, 2}, {1, 0, 0});
  EXPECT_EQ(c->c1, 4.0);
  EXPECT_EQ(c->c2, 0.0);
  EXPECT_EQ(c->c3, 0.0);
  EXPECT_EQ(c->c4, 1.0);

  EXPECT_FALSE(compute_pair_feature({1, 2, 3}, {1, 0, 0}, {1, 2, 3}, {0, 1, 0}));
}

TEST(PairFeature, Convexity) {
  EXPECT_TRUE(convexity_admissible({2, -1, 1, 0}));
  EXPECT_FALSE(convexity_admissible({2, 1, 1, 0}));
  EXPECT_TRUE(convexity_admissible({1, 0, 0, 1}));
  EXPECT_FALSE(convexity_admissible({2, -1, -1, 0}));
}

TEST(PairFeature, MatchesAngleForm) {
  Gen g(1);
  for (int k = 0; k < 10000; ++k) {
    const ExactPair p = random_pair(g);
    const PairFeature c = testing::feature(p);
    const auto f = testing::angles(p);
    ASSERT_NEAR(c.c1, f.f1 * f.f1, 1e-12);
    ASSERT_NEAR(c.c2, f.f1 * std::cos(f.f2), 1e-12);
    ASSERT_NEAR(c.c3, f.f1 * std::cos(f.f3), 1e-12);
    ASSERT_NEAR(c.c4, std::cos(f.f4), 1e-12);
    ASSERT_GE(c.c1, 0.0);
    ASSERT_LE(c.c2 * c.c2, c.c1 * (1 + 1e-12));
    ASSERT_LE(c.c3 * c.c3, c.c1 * (1 + 1e-12));
    ASSERT_LE(std::abs(c.c4), 1.0 + 1e-12);
  }
}

TEST(Conditions, Examples) {
  const Tolerances tol(10 * kDeg);
  EXPECT_TRUE(check_np({4, 0, 0, 1}, tol));
  EXPECT_TRUE(check_pc({4, 0, 0, 1}, tol));
  EXPECT_TRUE(check_as({2, -1, 1, 0}, tol));
  EXPECT_TRUE(check_vt({2, -1, 1, 0}, tol));
  EXPECT_FALSE(check_np({2, -1, 1, 0}, tol));
  EXPECT_FALSE(check_pc({2, -1, 1, 0}, tol));
}

TEST(Conditions, TolerancesRejectOutOfRange) {
  EXPECT_THROW(Tolerances(0.0), std::invalid_argument);
  EXPECT_THROW(Tolerances(M_PI / 2), std::invalid_argument);
  EXPECT_THROW(Tolerances(0.1, 0.1, -0.1, 0.1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(Tolerances().as(), M_PI / 18);
}

TEST(Conditions, SphereAndCylinderPairsNest) {
  Gen g(2);
  const Tolerances tol(10 * kDeg);
  for (int k = 0; k < 10000; ++k) {
    const Sphere s = testing::random_sphere(g);
    const PairFeature cs = testing::feature(testing::sphere_pair(g, s));
    ASSERT_TRUE(check_as(cs, tol));
    ASSERT_TRUE(check_vt(cs, tol));
    ASSERT_TRUE(convexity_admissible(cs));
    const Cylinder c = testing::random_cylinder(g);
    const PairFeature cc = testing::feature(testing::cylinder_pair(g, c));
    ASSERT_TRUE(check_as(cc, tol));
    ASSERT_TRUE(convexity_admissible(cc));
  }
}

TEST(Conditions, ExactPairsPassForEveryTolerance) {
  Gen g(3);
  for (double eps : {0.01 * kDeg, 1 * kDeg, 5 * kDeg, 10 * kDeg, 45 * kDeg}) {
    const Tolerances tol(eps);
    for (int k = 0; k < 2000; ++k) {
      const PairFeature plane = testing::feature(testing::plane_pair(g));
      ASSERT_TRUE(check_np(plane, tol) && check_pc(plane, tol));
      const PairFeature sphere = testing::feature(testing::sphere_pair(g, testing::random_sphere(g)));
      ASSERT_TRUE(check_as(sphere, tol) && check_vt(sphere, tol));
      const PairFeature cyl = testing::feature(testing::cylinder_pair(g, testing::random_cylinder(g)));
      ASSERT_TRUE(check_as(cyl, tol));
    }
  }
}

// C-form and angle-form decisions agree away from the boundary; on
// convexity-admissible pairs the VT angle never wraps.
TEST(Conditions, AgreeWithAngleFormAndRejectViolations) {
  Gen g(4);
  for (double eps : {1 * kDeg, 5 * kDeg, 10 * kDeg}) {
    const Tolerances tol(eps);
    std::array<int, 4> violations{};
    for (int k = 0; k < 20000; ++k) {
      ExactPair p;
      switch (k % 4) {
        case 0: p = testing::plane_pair(g); break;
        case 1: p = testing::sphere_pair(g, testing::random_sphere(g)); break;
        case 2: p = testing::cylinder_pair(g, testing::random_cylinder(g)); break;
        default: p = random_pair(g); break;
      }
      p = perturbed(g, p, g.uniform(0.0, 3.0 * eps));
      const PairFeature c = testing::feature(p);
      const Deviations dev = deviations(p);
      auto agree = [&](double d, bool c_form, int slot) {
        if (std::abs(d - eps) < 1e-9) return;
        ASSERT_EQ(c_form, d < eps) << "deviation " << d / kDeg << " deg, eps " << eps / kDeg;
        if (d > eps) ++violations[slot];
      };
      agree(dev.np, check_np(c, tol), 0);
      agree(dev.pc, check_pc(c, tol), 1);
      agree(dev.as, check_as(c, tol), 2);
      if (convexity_admissible(c)) agree(dev.vt, check_vt(c, tol), 3);
    }
    for (int v : violations) EXPECT_GT(v, 100);
  }
}

TEST(Weights, Examples) {
  const Tolerances tol(10 * kDeg);
  EXPECT_DOUBLE_EQ(constraint_weight_as({2, -1, 1, 0}, tol), 1.0);
  EXPECT_DOUBLE_EQ(constraint_weight_np({1, 0, 0, 1}, tol) * constraint_weight_pc({1, 0, 0, 1}, tol), 1.0);
  // F2 + F3 - pi = eps / 2.
  const ExactPair half = testing::pair_from_angles(1.0, 2.0, M_PI - 2.0 + 5 * kDeg, 0.3);
  EXPECT_NEAR(constraint_weight_as(testing::feature(half), tol), 0.5, 1e-9);
  const ExactPair tilted = testing::pair_from_angles(1.0, M_PI / 2 + 2.5 * kDeg, M_PI / 2 - 5 * kDeg, 0.0);
  EXPECT_NEAR(constraint_weight_pc(testing::feature(tilted), tol), 0.75 * 0.5, 1e-9);
}

TEST(Weights, LinearInDeviationAndBounded) {
  Gen g(5);
  const Tolerances tol(10 * kDeg);
  for (int k = 0; k < 5000; ++k) {
    const ExactPair p = perturbed(g, testing::sphere_pair(g, testing::random_sphere(g)), g.uniform(0, 15 * kDeg));
    const PairFeature c = testing::feature(p);
    const Deviations dev = deviations(p);
    const double w_as = constraint_weight_as(c, tol);
    ASSERT_GE(w_as, 0.0);
    ASSERT_LE(w_as, 1.0);
    ASSERT_NEAR(w_as, std::max(0.0, 1.0 - dev.as / tol.as()), 1e-6);
    ASSERT_NEAR(constraint_weight_np(c, tol), std::max(0.0, 1.0 - dev.np / tol.np()), 1e-6);
    if (convexity_admissible(c)) {
      ASSERT_NEAR(constraint_weight_vt(c, tol), std::max(0.0, 1.0 - dev.vt / tol.vt()), 1e-6);
    }
  }
}

TEST(SphereRadius, Examples) {
  EXPECT_DOUBLE_EQ(*sphere_radius({2, -1, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*sphere_radius({3, -1, 1, 0.5}), 2.0);
  EXPECT_FALSE(sphere_radius({4, 0, 0, 1}));
}

TEST(SphereRadius, ExactRecovery) {
  Gen g(6);
  for (int k = 0; k < 10000; ++k) {
    const Sphere s = testing::random_sphere(g);
    const auto r = sphere_radius(testing::feature(testing::sphere_pair(g, s)));
    ASSERT_TRUE(r);
    ASSERT_LT(std::abs(*r - s.radius) / s.radius, 1e-9);
  }
}

TEST(CylinderVote, Example) {
  const Vec3 p_r(1, 0, 0), n_r(1, 0, 0), p_i(0, 1, 2), n_i(0, 1, 0);
  const PairFeature c = *compute_pair_feature(p_r, n_r, p_i, n_i);
  EXPECT_EQ(c.c1, 6.0);
  const auto v = cylinder_vote(p_r, n_r, p_i, n_i, c);
  ASSERT_TRUE(v);
  EXPECT_DOUBLE_EQ(v->radius, 1.0);
  EXPECT_NEAR(v->angle, M_PI / 2, 1e-15);
  const Vec3 a = TangentFrame::from_normal(n_r).axis_at(v->angle);
  EXPECT_NEAR(std::abs(a.dot(Vec3::UnitZ())), 1.0, 1e-15);
}

TEST(CylinderVote, ParallelNormalsRejected) {
  const PairFeature c{4, 0, 0, 1};
  EXPECT_FALSE(cylinder_vote({1, 0, 0}, {1, 0, 0}, {1, 0, 2}, {1, 0, 0}, c));
}

TEST(TangentFrame, IsOrthonormalWithNormal) {
  Gen g(7);
  for (Vec3 n : {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 0, 1)}) {
    const TangentFrame f = TangentFrame::from_normal(n);
    EXPECT_NEAR(f.y_axis.dot(n), 0.0, 1e-15);
    EXPECT_NEAR(f.z_axis.dot(n), 0.0, 1e-15);
    EXPECT_NEAR(f.y_axis.cross(f.z_axis).dot(n), 1.0, 1e-15);
  }
  for (int k = 0; k < 1000; ++k) {
    const Vec3 n = g.unit();
    const TangentFrame f = TangentFrame::from_normal(n);
    ASSERT_NEAR(f.y_axis.norm(), 1.0, 1e-12);
    ASSERT_NEAR(f.y_axis.dot(f.z_axis), 0.0, 1e-12);
    ASSERT_NEAR(f.y_axis.cross(f.z_axis).dot(n), 1.0, 1e-12);
  }
}

TEST(CylinderVote, ExactRecovery) {
  Gen g(8);
  for (int k = 0; k < 10000; ++k) {
    const Cylinder cyl = testing::random_cylinder(g);
    const ExactPair p = testing::cylinder_pair(g, cyl);
    const auto v = cylinder_vote(p.r.position, p.r.normal, p.i.position, p.i.normal, testing::feature(p));
    ASSERT_TRUE(v);
    ASSERT_LT(std::abs(v->radius - cyl.radius) / cyl.radius, 1e-9);
    ASSERT_GE(v->angle, 0.0);
    ASSERT_LT(v->angle, M_PI);
    const Vec3 a = TangentFrame::from_normal(p.r.normal).axis_at(v->angle);
    ASSERT_GT(std::abs(a.dot(cyl.axis)), 1.0 - 1e-9);
  }
}

TEST(ConeVote, Example) {
  const Vec3 p_r(1, 0, 1), n_r(kH, 0, -kH), p_i(0, 2, 2), n_i(0, kH, -kH);
  const PairFeature c = *compute_pair_feature(p_r, n_r, p_i, n_i);
  EXPECT_NEAR(c.c2, -std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.c3, kH, 1e-15);
  EXPECT_NEAR(c.c4, 0.5, 1e-15);
  const auto v = cone_vote(p_r, n_r, p_i, n_i, c, {});
  ASSERT_TRUE(v);
  EXPECT_NEAR(v->s_r, std::sqrt(2.0), 1e-12);
  EXPECT_LT((v->axis - Vec3::UnitZ()).norm(), 1e-12);

  const Vec3 q_i(0, 1, 1), m_i(0, kH, -kH);
  EXPECT_FALSE(cone_vote(p_r, n_r, q_i, m_i, *compute_pair_feature(p_r, n_r, q_i, m_i), {}));
}

TEST(ConeVote, LimitsDropVotes) {
  const Vec3 p_r(1, 0, 1), n_r(kH, 0, -kH), p_i(0, 2, 2), n_i(0, kH, -kH);
  const PairFeature c = *compute_pair_feature(p_r, n_r, p_i, n_i);
  EXPECT_FALSE(cone_vote(p_r, n_r, p_i, n_i, c, {1.0, 0.0}));
  EXPECT_FALSE(cone_vote(p_r, n_r, p_i, n_i, c, {0.0, 2.5}));
  EXPECT_TRUE(cone_vote(p_r, n_r, p_i, n_i, c, {2.0, 1.5}));
}

TEST(ExtractCone, Examples) {
  const Vec3 p_r(1, 0, 1), n_r(kH, 0, -kH);
  for (const Vec3& axis : {Vec3(0, 0, 1), Vec3(0, 0, -1)}) {
    const auto k = extract_cone(std::sqrt(2.0), axis, p_r, n_r);
    ASSERT_TRUE(k);
    EXPECT_LT(k->apex.norm(), 1e-12);
    EXPECT_LT((k->axis - Vec3::UnitZ()).norm(), 1e-12);
    EXPECT_NEAR(k->angle, M_PI / 4, 1e-12);
  }
  EXPECT_FALSE(extract_cone(1.0, Vec3(0, 1, 0), p_r, n_r));
}

TEST(ConeVote, ExactRecovery) {
  Gen g(9);
  for (int k = 0; k < 10000; ++k) {
    const Cone cone = testing::random_cone(g);
    const ExactPair p = testing::cone_pair(g, cone);
    const auto v = cone_vote(p.r.position, p.r.normal, p.i.position, p.i.normal, testing::feature(p), {});
    ASSERT_TRUE(v);
    ASSERT_GT(v->axis.z(), -1e-15);
    const auto got = extract_cone(v->s_r, v->axis, p.r.position, p.r.normal);
    ASSERT_TRUE(got);
    ASSERT_LT((got->apex - cone.apex).norm(), 1e-9);
    ASSERT_LT((got->axis - cone.axis).norm(), 1e-9);
    ASSERT_NEAR(got->angle, cone.angle, 1e-9);
  }
}

TEST(CanonicalHemisphere, FoldsAntipodes) {
  EXPECT_EQ(canonical_hemisphere({0, 0, -1}), Vec3(0, 0, 1));
  EXPECT_EQ(canonical_hemisphere({1, -1, 0}), Vec3(-1, 1, 0));
  EXPECT_EQ(canonical_hemisphere({-1, 0, 0}), Vec3(1, 0, 0));
  Gen g(10);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 v = g.unit();
    ASSERT_EQ(canonical_hemisphere(v), canonical_hemisphere(-v));
  }
}

TEST(PairOutputs, AreRigidlyEquivariant) {
  Gen g(11);
  for (int k = 0; k < 3000; ++k) {
    const Eigen::Isometry3d pose = g.pose(10.0);
    const ExactPair s = testing::sphere_pair(g, testing::random_sphere(g));
    const ExactPair st = testing::transformed(s, pose);
    ASSERT_NEAR(*sphere_radius(testing::feature(s)), *sphere_radius(testing::feature(st)), 1e-9);

    const ExactPair c = testing::cylinder_pair(g, testing::random_cylinder(g));
    const ExactPair ct = testing::transformed(c, pose);
    const auto v = cylinder_vote(c.r.position, c.r.normal, c.i.position, c.i.normal, testing::feature(c));
    const auto vt = cylinder_vote(ct.r.position, ct.r.normal, ct.i.position, ct.i.normal, testing::feature(ct));
    ASSERT_NEAR(v->radius, vt->radius, 1e-9);
    const Vec3 a = pose.linear() * TangentFrame::from_normal(c.r.normal).axis_at(v->angle);
    const Vec3 at = TangentFrame::from_normal(ct.r.normal).axis_at(vt->angle);
    ASSERT_GT(std::abs(a.dot(at)), 1.0 - 1e-9);

    const Cone cone = testing::random_cone(g);
    const ExactPair q = testing::cone_pair(g, cone);
    const ExactPair qt = testing::transformed(q, pose);
    const auto w = cone_vote(q.r.position, q.r.normal, q.i.position, q.i.normal, testing::feature(q), {});
    const auto wt = cone_vote(qt.r.position, qt.r.normal, qt.i.position, qt.i.normal, testing::feature(qt), {});
    ASSERT_NEAR(w->s_r, wt->s_r, 1e-9 * std::max(1.0, w->s_r));
    ASSERT_GT(std::abs((pose.linear() * w->axis).dot(wt->axis)), 1.0 - 1e-9);
    const auto k1 = extract_cone(w->s_r, w->axis, q.r.position, q.r.normal);
    const auto k2 = extract_cone(wt->s_r, wt->axis, qt.r.position, qt.r.normal);
    ASSERT_NEAR(k1->angle, k2->angle, 1e-9);
  }
}

}  // namespace
}  // namespace primvote
