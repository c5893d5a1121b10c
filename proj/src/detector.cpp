#include "primvote/detector.hpp"

#include "primvote/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace primvote {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

ExtractOptions extract_options(const DetectorConfig& config) {
  return {config.min_votes, config.use_bin_averaging, config.bin_neighborhood};
}

bool fraction_ok(double f) { return f > 0.0 && f <= 1.0; }

// p_i is compatible with O: close to the surface and with a matching normal.
bool compatible(const OrientedPoint& p, const Primitive& o, double max_distance, double cos_angle) {
  if (!(std::abs(signed_distance(p.position, o)) < max_distance)) return false;
  return p.normal.dot(surface_normal_at(p.position, o).direction) > cos_angle;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  // The smaller root survives, so roots stay the strongest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

Vec3 aligned(const Vec3& v, const Vec3& to) { return v.dot(to) < 0.0 ? Vec3(-v) : v; }

// Weighted mean of same-type candidates; members[0] is the heaviest.
Primitive average(const std::vector<const Candidate*>& members) {
  double total = 0.0;
  for (const Candidate* c : members) total += c->averaging_weight();
  const Primitive& lead = members.front()->primitive;

  switch (type_of(lead)) {
    case PrimitiveType::kPlane: {
      // Planes are averaged through the weighted centroid of their reference
      // points rather than through their offsets, which are sensitive to
      // small normal tilts far from the origin.
      Vec3 normal = Vec3::Zero(), anchor = Vec3::Zero();
      for (const Candidate* c : members) {
        const auto& p = std::get<Plane>(c->primitive);
        normal += c->averaging_weight() * p.normal;
        anchor += c->averaging_weight() * project(c->reference.position, c->primitive);
      }
      return make_plane(normal.normalized(), anchor / total);
    }
    case PrimitiveType::kSphere: {
      Vec3 center = Vec3::Zero();
      double radius = 0.0;
      for (const Candidate* c : members) {
        const auto& s = std::get<Sphere>(c->primitive);
        center += c->averaging_weight() * s.center;
        radius += c->averaging_weight() * s.radius;
      }
      return Sphere{center / total, radius / total};
    }
    case PrimitiveType::kCylinder: {
      const Vec3 ref_axis = std::get<Cylinder>(lead).axis;
      Vec3 axis = Vec3::Zero(), anchor = Vec3::Zero();
      double radius = 0.0;
      for (const Candidate* c : members) {
        const auto& y = std::get<Cylinder>(c->primitive);
        axis += c->averaging_weight() * aligned(y.axis, ref_axis);
        // Axis point next to the reference, so feet of tilted axes far from
        // the origin do not drag the mean.
        const Vec3& p = c->reference.position;
        anchor += c->averaging_weight() * (y.foot + y.axis.dot(p - y.foot) * y.axis);
        radius += c->averaging_weight() * y.radius;
      }
      return make_cylinder(axis.normalized(), anchor / total, radius / total);
    }
    case PrimitiveType::kCone: {
      const Vec3 ref_axis = std::get<Cone>(lead).axis;
      Vec3 apex = Vec3::Zero(), axis = Vec3::Zero();
      double angle = 0.0;
      for (const Candidate* c : members) {
        const auto& k = std::get<Cone>(c->primitive);
        apex += c->averaging_weight() * k.apex;
        axis += c->averaging_weight() * aligned(k.axis, ref_axis);
        angle += c->averaging_weight() * k.angle;
      }
      return make_cone(apex / total, axis.normalized(), angle / total);
    }
  }
  return lead;
}

std::vector<std::size_t> sample_references(std::size_t n, const DetectorConfig& config) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n <= config.n_reference) return all;
  // Partial Fisher-Yates.
  Rng rng(config.rng_seed);
  for (std::size_t i = 0; i < config.n_reference; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(all[i], all[j]);
  }
  all.resize(config.n_reference);
  return all;
}

void vote_reference(const PointCloud& cloud, const ReferenceContext& ctx, std::size_t reference_point,
                    std::size_t slot, AccumulatorSet& acc) {
  acc.reset();
  const Vec3& p_r = ctx.reference.position;
  auto visit = [&](std::size_t i) {
    if (i == reference_point) return;
    const OrientedPoint& partner = cloud[i];
    if ((partner.position - p_r).squaredNorm() > ctx.max_pair_distance2) return;
    vote_pair(ctx, partner, acc);
  };
  // Small clouds pair every point once; repeated draws of one partner would
  // count the same evidence several times.
  if (cloud.size() <= ctx.config->n_pair) {
    for (std::size_t i = 0; i < cloud.size(); ++i) visit(i);
    return;
  }
  Rng rng = Rng::substream(ctx.config->rng_seed, slot);
  for (std::size_t k = 0; k < ctx.config->n_pair; ++k) visit(static_cast<std::size_t>(rng.index(cloud.size())));
}

}  // namespace

void DetectorConfig::validate() const {
  if (n_reference == 0 || n_pair == 0 || radius_bin_count == 0)
    throw std::invalid_argument("detector counts must be positive");
  if (!fraction_ok(radius_bin_fraction) || !fraction_ok(max_pair_distance_fraction) ||
      !fraction_ok(cluster_dist_fraction))
    throw std::invalid_argument("detector fractions must lie in (0, 1]");
  if (!(angle_bin > 0.0 && angle_bin <= M_PI / 2.0))
    throw std::invalid_argument("angle bin must lie in (0, pi/2]");
  if (!(cluster_angle > 0.0 && cluster_angle < M_PI))
    throw std::invalid_argument("cluster angle must lie in (0, pi)");
  if (!(min_votes >= 0.0)) throw std::invalid_argument("min_votes must be non-negative");
  if (bin_neighborhood < 0) throw std::invalid_argument("bin neighborhood must be non-negative");
  if (std::none_of(enabled_types.begin(), enabled_types.end(), [](bool b) { return b; }))
    throw std::invalid_argument("at least one primitive type must be enabled");
}

AccumulatorSet::AccumulatorSet(const DetectorConfig& config, double scene_diameter)
    : sphere(config.radius_bin_fraction * scene_diameter, config.radius_bin_count),
      cylinder(config.radius_bin_fraction * scene_diameter, config.radius_bin_count, config.angle_bin),
      cone(config.radius_bin_fraction * scene_diameter, config.radius_bin_count, config.angle_bin) {}

void AccumulatorSet::reset() {
  plane.reset();
  sphere.reset();
  cylinder.reset();
  cone.reset();
}

ReferenceContext::ReferenceContext(const OrientedPoint& ref, const DetectorConfig& cfg, double scene_diameter)
    : reference(ref),
      frame(TangentFrame::from_normal(ref.normal)),
      limits{cfg.radius_bin_fraction * scene_diameter * static_cast<double>(cfg.radius_bin_count), 1e-12},
      max_pair_distance2(std::pow(cfg.max_pair_distance_fraction * scene_diameter, 2)),
      config(&cfg) {}

VoteTrace vote_pair(const ReferenceContext& ctx, const OrientedPoint& partner, AccumulatorSet& acc) {
  VoteTrace trace;
  const DetectorConfig& cfg = *ctx.config;
  const Vec3& p_r = ctx.reference.position;
  const Vec3& n_r = ctx.reference.normal;
  const auto feature = compute_pair_feature(p_r, n_r, partner.position, partner.normal);
  if (!feature) return trace;
  const PairFeature& c = *feature;
  const Tolerances& tol = cfg.tolerances;
  const bool spread = cfg.use_vote_spreading;

  // With parallel normals C2 = C3, so the convexity inequalities leave only
  // C2 = 0, which PC already checks within its tolerance. Testing them
  // exactly would reject every noisy coplanar pair.
  if (check_np(c, tol)) {
    if (cfg.enabled(PrimitiveType::kPlane) && check_pc(c, tol)) {
      acc.plane.add(spread ? constraint_weight_np(c, tol) * constraint_weight_pc(c, tol) : 1.0);
      trace.plane = true;
    }
    return trace;
  }
  if (!convexity_admissible(c)) return trace;

  if (cfg.enabled(PrimitiveType::kCone)) {
    if (const auto v = cone_vote(p_r, n_r, partner.position, partner.normal, c, ctx.limits)) {
      trace.cone = spread ? acc.cone.spread(v->s_r, v->axis, 1.0) : acc.cone.add_nearest(v->s_r, v->axis, 1.0);
    }
  }
  if (!check_as(c, tol)) return trace;
  const double w_as = spread ? constraint_weight_as(c, tol) : 1.0;

  if (cfg.enabled(PrimitiveType::kCylinder)) {
    if (const auto v = cylinder_vote(ctx.frame, n_r, partner.normal, c)) {
      trace.cylinder = spread ? acc.cylinder.spread(v->radius, v->angle, w_as)
                              : acc.cylinder.add_nearest(v->radius, v->angle, 1.0);
    }
  }
  if (cfg.enabled(PrimitiveType::kSphere) && check_vt(c, tol)) {
    if (const auto r = sphere_radius(c)) {
      trace.sphere = spread ? acc.sphere.spread(*r, w_as * constraint_weight_vt(c, tol))
                            : acc.sphere.add_nearest(*r, 1.0);
    }
  }
  return trace;
}

std::vector<Candidate> extract_candidates(const ReferenceContext& ctx, const AccumulatorSet& acc,
                                          std::size_t reference_index) {
  const DetectorConfig& cfg = *ctx.config;
  const ExtractOptions opt = extract_options(cfg);
  const Vec3& p_r = ctx.reference.position;
  const Vec3& n_r = ctx.reference.normal;
  std::vector<Candidate> found;
  auto emit = [&](Primitive primitive, double mass, double window_mass) {
    found.push_back(Candidate{std::move(primitive), ctx.reference, mass, reference_index, window_mass});
  };

  if (cfg.enabled(PrimitiveType::kPlane)) {
    if (const auto mass = acc.plane.extract_max(opt)) emit(make_plane(n_r, p_r), *mass, *mass);
  }
  if (cfg.enabled(PrimitiveType::kSphere)) {
    if (const auto peak = acc.sphere.extract_max(opt)) emit(Sphere{p_r - peak->value * n_r, peak->value}, peak->mass, peak->window_mass);
  }
  if (cfg.enabled(PrimitiveType::kCylinder)) {
    if (const auto peak = acc.cylinder.extract_max(opt)) {
      emit(make_cylinder(ctx.frame.axis_at(peak->angle), p_r - peak->radius * n_r, peak->radius), peak->mass,
           peak->window_mass);
    }
  }
  if (cfg.enabled(PrimitiveType::kCone)) {
    if (const auto peak = acc.cone.extract_max(opt)) {
      if (const auto cone = extract_cone(peak->s_r, peak->axis, p_r, n_r)) emit(*cone, peak->mass, peak->window_mass);
    }
  }

  if (cfg.per_type_extraction || found.size() <= 1) return found;
  // Vote masses are comparable across types; ties keep the lower type.
  std::size_t best = 0;
  for (std::size_t i = 1; i < found.size(); ++i)
    if (found[i].vote_mass > found[best].vote_mass) best = i;
  return {found[best]};
}

std::vector<DetectedPrimitive> cluster(const std::vector<Candidate>& candidates, double scene_diameter,
                                       const DetectorConfig& config) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].vote_mass > candidates[b].vote_mass;
  });
  std::vector<PrimitiveType> types(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) types[k] = type_of(candidates[order[k]].primitive);

  const double max_distance = config.cluster_dist_fraction * scene_diameter;
  const double cos_angle = std::cos(config.cluster_angle);
  auto similar = [&](const OrientedPoint& pa, const Primitive& a, const OrientedPoint& pb, const Primitive& b) {
    return compatible(pa, b, max_distance, cos_angle) && compatible(pb, a, max_distance, cos_angle);
  };

  DisjointSets sets(order.size());
  for (std::size_t a = 0; a < order.size(); ++a) {
    const Candidate& ca = candidates[order[a]];
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (types[a] != types[b] || sets.find(a) == sets.find(b)) continue;
      const Candidate& cb = candidates[order[b]];
      if (similar(ca.reference, ca.primitive, cb.reference, cb.primitive)) sets.unite(a, b);
    }
  }

  // Merge whole clusters whose representatives pass the same test, until
  // nothing changes; this makes clustering the output a no-op.
  std::vector<DetectedPrimitive> out;
  std::vector<std::size_t> root_of;
  for (;;) {
    std::vector<std::vector<const Candidate*>> groups;
    std::vector<std::size_t> group_of(order.size(), SIZE_MAX);
    root_of.clear();
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t root = sets.find(k);
      if (group_of[root] == SIZE_MAX) {
        group_of[root] = groups.size();
        groups.emplace_back();
        root_of.push_back(root);
      }
      groups[group_of[root]].push_back(&candidates[order[k]]);
    }

    out.clear();
    for (const auto& members : groups) {
      DetectedPrimitive d;
      d.primitive = config.use_cluster_averaging && members.size() > 1 ? average(members) : members.front()->primitive;
      for (const Candidate* c : members) d.vote_mass += c->vote_mass;
      d.support = members.size();
      d.reference = members.front()->reference;
      out.push_back(std::move(d));
    }

    bool merged = false;
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = a + 1; b < out.size(); ++b) {
        if (type_of(out[a].primitive) != type_of(out[b].primitive)) continue;
        if (sets.find(root_of[a]) == sets.find(root_of[b])) continue;
        if (similar(out[a].reference, out[a].primitive, out[b].reference, out[b].primitive)) {
          sets.unite(root_of[a], root_of[b]);
          merged = true;
        }
      }
    if (!merged) break;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const DetectedPrimitive& a, const DetectedPrimitive& b) { return a.vote_mass > b.vote_mass; });
  return out;
}

std::vector<std::int32_t> assign_inliers(const PointCloud& cloud, const std::vector<Primitive>& primitives,
                                         const DetectorConfig& config) {
  std::vector<std::int32_t> labels(cloud.size(), -1);
  const double max_distance = config.cluster_dist_fraction * cloud.diameter();
  const double cos_angle = std::cos(config.cluster_angle);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t k = 0; k < primitives.size(); ++k) {
      if (compatible(cloud[i], primitives[k], max_distance, cos_angle)) {
        labels[i] = static_cast<std::int32_t>(k);
        break;
      }
    }
  }
  return labels;
}

std::vector<Primitive> DetectionReport::shapes() const {
  std::vector<Primitive> out;
  out.reserve(primitives.size());
  for (const auto& d : primitives) out.push_back(d.primitive);
  return out;
}

DetectionReport detect(const PointCloud& cloud, const DetectorConfig& config) {
  config.validate();
  if (cloud.size() < 2) throw std::invalid_argument("detection needs at least two points");
  const double ds = cloud.diameter();
  if (!(ds > 0.0)) throw std::invalid_argument("cloud has zero extent");

  const auto start = Clock::now();
  DetectionReport report;
  report.config = config;
  report.scene_diameter = ds;

  const std::vector<std::size_t> refs = sample_references(cloud.size(), config);
  report.reference_count = refs.size();
  std::vector<std::vector<Candidate>> per_ref(refs.size());

  auto work = [&](std::size_t slot, AccumulatorSet& acc) {
    const ReferenceContext ctx(cloud[refs[slot]], config, ds);
    vote_reference(cloud, ctx, refs[slot], slot, acc);
    per_ref[slot] = extract_candidates(ctx, acc, refs[slot]);
  };

  const unsigned threads = std::max(1u, config.threads);
  if (threads == 1) {
    AccumulatorSet acc(config, ds);
    for (std::size_t s = 0; s < refs.size(); ++s) work(s, acc);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        AccumulatorSet acc(config, ds);
        for (std::size_t s; (s = next.fetch_add(1)) < refs.size();) work(s, acc);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<Candidate> candidates;
  for (auto& list : per_ref)
    for (auto& c : list) candidates.push_back(std::move(c));
  report.candidate_count = candidates.size();
  report.timing.voting_ms = elapsed_ms(start);

  const auto cluster_start = Clock::now();
  report.primitives = cluster(candidates, ds, config);
  report.timing.clustering_ms = elapsed_ms(cluster_start);

  const auto inlier_start = Clock::now();
  report.inlier_labels = assign_inliers(cloud, report.shapes(), config);
  report.timing.inliers_ms = elapsed_ms(inlier_start);
  report.timing.total_ms = elapsed_ms(start);
  return report;
}

void dump_accumulators_csv(const PointCloud& cloud, const DetectorConfig& config, std::size_t reference_index,
                           std::ostream& out) {
  config.validate();
  if (cloud.size() < 2) throw std::invalid_argument("detection needs at least two points");
  const double ds = cloud.diameter();
  const std::vector<std::size_t> refs = sample_references(cloud.size(), config);
  if (reference_index >= refs.size()) throw std::out_of_range("reference index beyond the sampled references");

  AccumulatorSet acc(config, ds);
  const ReferenceContext ctx(cloud[refs[reference_index]], config, ds);
  vote_reference(cloud, ctx, refs[reference_index], reference_index, acc);

  out.precision(17);
  out << "type,p1,p2,p3,p4,mass\n";
  if (acc.plane.total() > 0.0) out << "plane,,,,," << acc.plane.total() << '\n';
  for (std::size_t i = 0; i < acc.sphere.bin_count(); ++i)
    if (acc.sphere.bins()[i] > 0.0) out << "sphere," << acc.sphere.center(i) << ",,,," << acc.sphere.bins()[i] << '\n';
  const auto& cyl = acc.cylinder;
  for (std::size_t i = 0; i < cyl.radius_axis().bin_count(); ++i)
    for (std::size_t j = 0; j < cyl.angle_bins(); ++j)
      if (cyl.at(i, j) > 0.0)
        out << "cylinder," << cyl.radius_axis().center(i) << ',' << cyl.angle_center(j) << ",,," << cyl.at(i, j)
            << '\n';
  const auto& cone = acc.cone;
  for (std::size_t i = 0; i < cone.s_axis().bin_count(); ++i)
    for (std::uint32_t k = 0; k < cone.grid().cell_count(); ++k)
      if (cone.at(i, k) > 0.0) {
        const Vec3& a = cone.grid().cell(k).center;
        out << "cone," << cone.s_axis().center(i) << ',' << a.x() << ',' << a.y() << ',' << a.z() << ','
            << cone.at(i, k) << '\n';
      }
}

}  // namespace primvote
