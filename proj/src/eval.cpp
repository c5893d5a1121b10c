#include "primvote/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace primvote {

namespace {

std::vector<double> cdf(std::vector<double> errors, std::span<const double> epsilon) {
  std::sort(errors.begin(), errors.end());
  std::vector<double> value;
  value.reserve(epsilon.size());
  for (double e : epsilon) {
    const auto below = std::lower_bound(errors.begin(), errors.end(), e) - errors.begin();
    value.push_back(errors.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(errors.size()));
  }
  return value;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::size_t checked_label(std::int32_t label, std::size_t count) {
  if (label < -1 || (label >= 0 && static_cast<std::size_t>(label) >= count))
    throw std::invalid_argument("label outside the primitive range");
  return static_cast<std::size_t>(label);
}

}  // namespace

std::vector<double> log_epsilon_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && lo < hi) || count < 2) throw std::invalid_argument("invalid epsilon grid");
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

std::vector<double> point_errors(const PointCloud& cloud, const std::vector<Primitive>& primitives) {
  std::vector<double> errors(cloud.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (const Primitive& o : primitives) errors[i] = std::min(errors[i], std::abs(signed_distance(cloud[i].position, o)));
  return errors;
}

CoverageCurve p_coverage(std::span<const double> errors, std::span<const double> epsilon) {
  std::vector<double> e(errors.begin(), errors.end());
  CoverageCurve curve;
  curve.epsilon.assign(epsilon.begin(), epsilon.end());
  curve.mean_error = mean(e);
  curve.value = cdf(std::move(e), epsilon);
  return curve;
}

CoverageCurve s_coverage(const PointCloud& cloud, const std::vector<Primitive>& primitives,
                         std::span<const std::int32_t> labels, std::span<const double> epsilon) {
  if (labels.size() != cloud.size()) throw std::invalid_argument("one label per point required");
  std::vector<std::vector<double>> per(primitives.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t k = checked_label(labels[i], primitives.size());
    if (labels[i] >= 0) per[k].push_back(std::abs(signed_distance(cloud[i].position, primitives[k])));
  }
  CoverageCurve curve;
  std::size_t used = 0;
  for (const auto& errors : per) {
    if (errors.empty()) continue;
    const std::vector<double> v = cdf(errors, epsilon);
    if (used == 0) curve.value.assign(v.size(), 0.0);
    for (std::size_t j = 0; j < v.size(); ++j) curve.value[j] += v[j];
    curve.mean_error += mean(errors);
    ++used;
  }
  if (used == 0) return {};
  curve.epsilon.assign(epsilon.begin(), epsilon.end());
  for (double& v : curve.value) v /= static_cast<double>(used);
  curve.mean_error /= static_cast<double>(used);
  return curve;
}

double dod(const Primitive& gt, const Primitive& det, std::span<const Vec3> points) {
  if (points.empty()) throw std::invalid_argument("object distance needs at least one point");
  double sum = 0.0;
  for (const Vec3& p : points) sum += (project(p, gt) - project(p, det)).norm();
  return sum / static_cast<double>(points.size());
}

PrReport match_and_score(std::span<const std::int32_t> truth_labels, std::size_t truth_count,
                         std::span<const std::int32_t> detection_labels, std::size_t detection_count,
                         double threshold) {
  if (truth_labels.size() != detection_labels.size())
    throw std::invalid_argument("label sets cover different clouds");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");

  const std::size_t G = truth_count, D = detection_count;
  std::vector<std::size_t> overlap(G * D, 0), g_size(G, 0), d_size(D, 0);
  for (std::size_t i = 0; i < truth_labels.size(); ++i) {
    const std::size_t g = checked_label(truth_labels[i], G);
    const std::size_t d = checked_label(detection_labels[i], D);
    if (truth_labels[i] >= 0) ++g_size[g];
    if (detection_labels[i] >= 0) ++d_size[d];
    if (truth_labels[i] >= 0 && detection_labels[i] >= 0) ++overlap[g * D + d];
  }
  auto covers = [&](std::size_t shared, std::size_t whole) {
    return whole > 0 && static_cast<double>(shared) >= threshold * static_cast<double>(whole);
  };

  PrReport r;
  r.threshold = threshold;
  r.truths = G;
  r.detections = D;

  // Correct: greedy on descending overlap, one-to-one.
  std::vector<Correspondence> pairs;
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t o = overlap[g * D + d];
      if (o > 0 && covers(o, g_size[g]) && covers(o, d_size[d])) pairs.push_back({g, d, o});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Correspondence& a, const Correspondence& b) { return a.overlap > b.overlap; });
  std::vector<bool> g_used(G, false), d_used(D, false);
  for (const Correspondence& c : pairs) {
    if (g_used[c.truth] || d_used[c.detection]) continue;
    g_used[c.truth] = d_used[c.detection] = true;
    r.matches.push_back(c);
  }
  r.correct = r.matches.size();

  // Over-segmentation: a ground-truth object covered by several detections
  // that each lie mostly inside it. Under-segmentation is the mirror case.
  std::vector<bool> g_explained = g_used, d_explained = d_used;
  for (std::size_t g = 0; g < G; ++g) {
    if (g_used[g]) continue;
    std::size_t parts = 0, shared = 0;
    for (std::size_t d = 0; d < D; ++d)
      if (!d_used[d] && covers(overlap[g * D + d], d_size[d])) ++parts, shared += overlap[g * D + d];
    if (parts >= 2 && covers(shared, g_size[g])) {
      ++r.over_segmented;
      g_explained[g] = true;
      for (std::size_t d = 0; d < D; ++d)
        if (!d_used[d] && covers(overlap[g * D + d], d_size[d])) d_explained[d] = true;
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (d_used[d]) continue;
    std::size_t parts = 0, shared = 0;
    for (std::size_t g = 0; g < G; ++g)
      if (!g_used[g] && covers(overlap[g * D + d], g_size[g])) ++parts, shared += overlap[g * D + d];
    if (parts >= 2 && covers(shared, d_size[d])) {
      ++r.under_segmented;
      d_explained[d] = true;
      for (std::size_t g = 0; g < G; ++g)
        if (!g_used[g] && covers(overlap[g * D + d], g_size[g])) g_explained[g] = true;
    }
  }
  r.missed = static_cast<std::size_t>(std::count(g_explained.begin(), g_explained.end(), false));
  r.noise = static_cast<std::size_t>(std::count(d_explained.begin(), d_explained.end(), false));

  if (D > 0) {
    r.precision = static_cast<double>(r.correct) / static_cast<double>(D);
    r.noise_rate = static_cast<double>(r.noise) / static_cast<double>(D);
  }
  if (G > 0) {
    r.recall = static_cast<double>(r.correct) / static_cast<double>(G);
    r.missed_rate = static_cast<double>(r.missed) / static_cast<double>(G);
  }
  return r;
}

PrReport match_and_score_type(std::span<const std::int32_t> truth_labels, std::span<const PrimitiveType> truth_types,
                              std::span<const std::int32_t> detection_labels,
                              std::span<const PrimitiveType> detection_types, PrimitiveType type, double threshold) {
  // Compact the indices of the kept primitives; everything else becomes -1.
  auto restrict = [type](std::span<const std::int32_t> labels, std::span<const PrimitiveType> types,
                         std::vector<std::size_t>& kept) {
    std::vector<std::int32_t> index(types.size(), -1);
    for (std::size_t k = 0; k < types.size(); ++k)
      if (types[k] == type) {
        index[k] = static_cast<std::int32_t>(kept.size());
        kept.push_back(k);
      }
    std::vector<std::int32_t> out(labels.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] >= 0) out[i] = index[checked_label(labels[i], types.size())];
    return out;
  };
  std::vector<std::size_t> truth_kept, detection_kept;
  const auto t = restrict(truth_labels, truth_types, truth_kept);
  const auto d = restrict(detection_labels, detection_types, detection_kept);
  PrReport r = match_and_score(t, truth_kept.size(), d, detection_kept.size(), threshold);
  for (Correspondence& c : r.matches) {
    c.truth = truth_kept[c.truth];
    c.detection = detection_kept[c.detection];
  }
  return r;
}

std::vector<MatchDistance> matched_distances(const PointCloud& cloud, const std::vector<Primitive>& truth,
                                             std::span<const std::int32_t> truth_labels,
                                             const std::vector<Primitive>& detections, const PrReport& report) {
  std::vector<std::vector<Vec3>> members(truth.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (truth_labels[i] >= 0) members[checked_label(truth_labels[i], truth.size())].push_back(cloud[i].position);
  std::vector<MatchDistance> out;
  for (const Correspondence& c : report.matches) {
    if (c.truth >= truth.size() || c.detection >= detections.size())
      throw std::invalid_argument("match refers to a missing primitive");
    out.push_back({c, dod(truth[c.truth], detections[c.detection], members[c.truth])});
  }
  return out;
}

Evaluation evaluate(const PointCloud& cloud, const GroundTruth& truth, const std::vector<Primitive>& detections,
                    std::span<const std::int32_t> detection_labels, std::span<const double> epsilon,
                    double threshold) {
  if (truth.labels.size() != cloud.size()) throw std::invalid_argument("ground truth labels do not match the cloud");
  const double sigma = truth.noise_sigma * truth.scene_diameter;
  auto finish = [&](PrReport scores) {
    TypeEvaluation e;
    e.distances = matched_distances(cloud, truth.primitives, truth.labels, detections, scores);
    e.scores = std::move(scores);
    if (!e.distances.empty()) {
      double sum = 0.0;
      for (const MatchDistance& m : e.distances) sum += m.dod;
      e.mean_dod = sum / static_cast<double>(e.distances.size());
      if (sigma > 0.0) e.mean_dod_sigma = *e.mean_dod / sigma;
    }
    return e;
  };

  std::vector<PrimitiveType> truth_types, detection_types;
  for (const Primitive& p : truth.primitives) truth_types.push_back(type_of(p));
  for (const Primitive& p : detections) detection_types.push_back(type_of(p));

  Evaluation out;
  out.overall = finish(match_and_score(truth.labels, truth.primitives.size(), detection_labels, detections.size(), threshold));
  for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t)
    out.per_type[t] = finish(match_and_score_type(truth.labels, truth_types, detection_labels, detection_types,
                                                  static_cast<PrimitiveType>(t), threshold));
  const std::vector<double> errors = point_errors(cloud, detections);
  out.p_coverage = p_coverage(errors, epsilon);
  out.s_coverage = s_coverage(cloud, detections, detection_labels, epsilon);
  return out;
}

}  // namespace primvote
