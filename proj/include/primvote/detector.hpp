#pragma once

#include "primvote/accumulator.hpp"
#include "primvote/geometry.hpp"
#include "primvote/hemisphere.hpp"
#include "primvote/ppf.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace primvote {

struct DetectorConfig {
  std::size_t n_reference = 2048;
  std::size_t n_pair = 2048;  // partners per reference, drawn with replacement; smaller clouds pair every point once
  double angle_bin = M_PI / 18.0;
  double radius_bin_fraction = 0.005;  // x d_s
  std::size_t radius_bin_count = 40;
  double max_pair_distance_fraction = 0.2;  // x d_s
  double min_votes = 8.0;                   // strict
  double cluster_dist_fraction = 0.01;      // x d_s
  double cluster_angle = M_PI / 9.0;        // 20 degrees
  Tolerances tolerances{};
  std::array<bool, kPrimitiveTypeCount> enabled_types{true, true, true, true};

  // Ablation switches.
  bool use_vote_spreading = true;  // off: nearest-bin votes without constraint weights
  bool use_bin_averaging = true;   // off: parameters of the maximal bin only
  bool use_cluster_averaging = true;  // off: keep the strongest candidate of each cluster

  bool per_type_extraction = false;  // one candidate per type instead of the overall best
  int bin_neighborhood = 1;
  std::uint64_t rng_seed = 0;
  unsigned threads = 0;  // 0 or 1: serial

  bool enabled(PrimitiveType t) const { return enabled_types[static_cast<std::size_t>(t)]; }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// The four vote stores of one reference point.
struct AccumulatorSet {
  AccumulatorSet(const DetectorConfig& config, double scene_diameter);
  void reset();

  ScalarAccumulator plane;
  GridAccumulator1D sphere;
  GridAccumulator2D cylinder;
  ConeAccumulator cone;
};

/// Per-reference quantities shared by all of its pairs.
struct ReferenceContext {
  ReferenceContext(const OrientedPoint& reference, const DetectorConfig& config, double scene_diameter);

  OrientedPoint reference;
  TangentFrame frame;
  VoteLimits limits;
  double max_pair_distance2;
  const DetectorConfig* config;
};

/// Which accumulators a pair touched.
struct VoteTrace {
  bool plane = false;
  bool sphere = false;
  bool cylinder = false;
  bool cone = false;
};

/// Joint voting decision for one pair: plane (NP and PC), or convexity and
/// the nested cone / cylinder (AS) / sphere (VT) chain.
VoteTrace vote_pair(const ReferenceContext& ctx, const OrientedPoint& partner, AccumulatorSet& acc);

struct Candidate {
  Primitive primitive;
  OrientedPoint reference;
  double vote_mass = 0.0;  // of the maximal bin
  std::size_t reference_index = 0;
  double window_mass = 0.0;  // of the bins the parameters were averaged over; 0: use vote_mass

  /// Weight in cluster averages. The maximal bin alone depends on where the
  /// estimate falls relative to the bin grid; the window does not.
  double averaging_weight() const { return window_mass > 0.0 ? window_mass : vote_mass; }
};

/// Candidates a reference point yields from its filled accumulators.
std::vector<Candidate> extract_candidates(const ReferenceContext& ctx, const AccumulatorSet& acc,
                                          std::size_t reference_index);

struct DetectedPrimitive {
  Primitive primitive;
  double vote_mass = 0.0;
  std::size_t support = 0;  // number of merged candidates
  OrientedPoint reference;   // of the strongest member
};

/// Groups same-type candidates that pass the distance / normal test in both
/// directions (single linkage), strongest cluster first.
std::vector<DetectedPrimitive> cluster(const std::vector<Candidate>& candidates, double scene_diameter,
                                       const DetectorConfig& config);

/// Per-point index of the first compatible primitive, -1 if none. Primitives
/// are expected strongest first, so contested points go to the better
/// supported one.
std::vector<std::int32_t> assign_inliers(const PointCloud& cloud, const std::vector<Primitive>& primitives,
                                         const DetectorConfig& config);

struct StageTimings {
  double voting_ms = 0.0;
  double clustering_ms = 0.0;
  double inliers_ms = 0.0;
  double total_ms = 0.0;
};

struct DetectionReport {
  std::vector<DetectedPrimitive> primitives;
  std::vector<std::int32_t> inlier_labels;
  DetectorConfig config;
  StageTimings timing;
  std::size_t candidate_count = 0;
  std::size_t reference_count = 0;
  double scene_diameter = 0.0;

  std::vector<Primitive> shapes() const;
};

DetectionReport detect(const PointCloud& cloud, const DetectorConfig& config);

/// Runs the voting of reference `reference_index` (position in the sampled
/// reference list) and writes every non-empty accumulator bin as CSV.
void dump_accumulators_csv(const PointCloud& cloud, const DetectorConfig& config, std::size_t reference_index,
                           std::ostream& out);

}  // namespace primvote
