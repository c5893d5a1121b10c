#pragma once

#include "primvote/datagen.hpp"
#include "primvote/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace primvote {

/// Sampled empirical CDF of point errors.
struct CoverageCurve {
  std::vector<double> epsilon;
  std::vector<double> value;  // fraction of errors strictly below epsilon
  double mean_error = 0.0;
};

/// `count` log-spaced samples from lo to hi inclusive.
std::vector<double> log_epsilon_grid(double lo = 1e-4, double hi = 0.1, std::size_t count = 100);

/// Distance from each point to its closest primitive; +infinity without primitives.
std::vector<double> point_errors(const PointCloud& cloud, const std::vector<Primitive>& primitives);

CoverageCurve p_coverage(std::span<const double> errors, std::span<const double> epsilon);

/// Unweighted mean of the per-primitive coverage of their own inliers.
/// Primitives without inliers are skipped; none left gives an empty curve.
CoverageCurve s_coverage(const PointCloud& cloud, const std::vector<Primitive>& primitives,
                         std::span<const std::int32_t> labels, std::span<const double> epsilon);

/// Mean distance between the projections of `points` onto gt and det.
double dod(const Primitive& gt, const Primitive& det, std::span<const Vec3> points);

struct Correspondence {
  std::size_t truth = 0;
  std::size_t detection = 0;
  std::size_t overlap = 0;
};

struct PrReport {
  double precision = 0.0;
  double recall = 0.0;
  double missed_rate = 0.0;
  double noise_rate = 0.0;
  double threshold = 0.6;
  std::size_t detections = 0;
  std::size_t truths = 0;
  std::size_t correct = 0;
  std::size_t over_segmented = 0;   // ground-truth objects split over several detections
  std::size_t under_segmented = 0;  // detections merging several ground-truth objects
  std::size_t missed = 0;
  std::size_t noise = 0;
  std::vector<Correspondence> matches;  // correct detections
};

/// Segmentation-comparison scoring. A ground-truth object and a detection
/// correspond when their shared points make up at least T of both inlier
/// sets. Labels are per point, -1 for unlabeled.
PrReport match_and_score(std::span<const std::int32_t> truth_labels, std::size_t truth_count,
                         std::span<const std::int32_t> detection_labels, std::size_t detection_count,
                         double threshold = 0.6);

/// Scores only the objects of one type. Primitives of other types are
/// removed from both sides before matching; the inlier sets of the remaining
/// ones are unchanged.
PrReport match_and_score_type(std::span<const std::int32_t> truth_labels, std::span<const PrimitiveType> truth_types,
                              std::span<const std::int32_t> detection_labels,
                              std::span<const PrimitiveType> detection_types, PrimitiveType type,
                              double threshold = 0.6);

struct MatchDistance {
  Correspondence match;
  double dod = 0.0;
};

/// DOD of every correct match, over the ground-truth object's points.
std::vector<MatchDistance> matched_distances(const PointCloud& cloud, const std::vector<Primitive>& truth,
                                             std::span<const std::int32_t> truth_labels,
                                             const std::vector<Primitive>& detections, const PrReport& report);

struct TypeEvaluation {
  PrReport scores;
  std::vector<MatchDistance> distances;
  std::optional<double> mean_dod;        // none without correct matches
  std::optional<double> mean_dod_sigma;  // in multiples of the noise level, none for noiseless scenes
};

struct Evaluation {
  TypeEvaluation overall;
  std::array<TypeEvaluation, kPrimitiveTypeCount> per_type;  // indexed by PrimitiveType
  CoverageCurve p_coverage;
  CoverageCurve s_coverage;
};

/// Scores detections against the ground truth of a generated scene.
Evaluation evaluate(const PointCloud& cloud, const GroundTruth& truth, const std::vector<Primitive>& detections,
                    std::span<const std::int32_t> detection_labels, std::span<const double> epsilon,
                    double threshold = 0.6);

}  // namespace primvote
