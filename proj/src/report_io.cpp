#include "primvote/report_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace primvote {

namespace {

constexpr double kDeg = M_PI / 180.0;

[[noreturn]] void schema(const std::string& what, const std::string& message) {
  throw FormatError(what + ": " + message);
}

// Reads the members of one JSON object and rejects the keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) schema(what_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& at(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) schema(what_, "missing key '" + key + "'");
    used_.insert(key);
    return *it;
  }
  std::string path(const std::string& key) const { return what_ + "." + key; }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) schema(path(key), "expected a number");
    return v.get<double>();
  }
  std::uint64_t count(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      schema(path(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_boolean()) schema(path(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) schema(path(key), "expected a string");
    return v.get<std::string>();
  }
  Vec3 vec3(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array() || v.size() != 3) schema(path(key), "expected 3 numbers");
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
      if (!v[static_cast<std::size_t>(k)].is_number()) schema(path(key), "expected 3 numbers");
      out[k] = v[static_cast<std::size_t>(k)].get<double>();
    }
    return out;
  }
  std::array<double, 2> pair(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      schema(path(key), "expected 2 numbers");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  // Optional members: leave `out` alone when the key is absent.
  void maybe(const std::string& key, double& out) {
    if (has(key)) out = number(key);
  }
  void maybe(const std::string& key, bool& out) {
    if (has(key)) out = boolean(key);
  }
  void maybe(const std::string& key, std::size_t& out) {
    if (has(key)) out = static_cast<std::size_t>(count(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.contains(key)) schema(what_, "unknown key '" + key + "'");
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> used_;
};

Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
Json optional_number(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

void write_primitive(const Primitive& primitive, Json& j) {
  j["type"] = std::string(type_name(type_of(primitive)));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Plane>) {
          j["normal"] = vec(p.normal);
          j["offset"] = p.offset;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          j["center"] = vec(p.center);
          j["radius"] = p.radius;
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          j["axis"] = vec(p.axis);
          j["foot"] = vec(p.foot);
          j["radius"] = p.radius;
        } else {
          j["apex"] = vec(p.apex);
          j["axis"] = vec(p.axis);
          j["opening_angle_rad"] = p.angle;
        }
      },
      primitive);
}

Primitive read_primitive(ObjectReader& r, const std::string& what) {
  const std::string tag = r.string("type");
  PrimitiveType type;
  try {
    type = parse_type_name(tag);
  } catch (const std::invalid_argument&) {
    schema(what, "unknown primitive type '" + tag + "'");
  }
  Primitive out;
  switch (type) {
    case PrimitiveType::kPlane: out = Plane{r.vec3("normal"), r.number("offset")}; break;
    case PrimitiveType::kSphere: out = Sphere{r.vec3("center"), r.number("radius")}; break;
    case PrimitiveType::kCylinder: out = Cylinder{r.vec3("axis"), r.vec3("foot"), r.number("radius")}; break;
    case PrimitiveType::kCone: out = Cone{r.vec3("apex"), r.vec3("axis"), r.number("opening_angle_rad")}; break;
  }
  try {
    validate(out);
  } catch (const std::invalid_argument& e) {
    schema(what, e.what());
  }
  return out;
}

Json point_to_json(const OrientedPoint& p) { return Json{{"position", vec(p.position)}, {"normal", vec(p.normal)}}; }

OrientedPoint point_from_json(const Json& j, const std::string& what) {
  ObjectReader r(j, what);
  OrientedPoint p{r.vec3("position"), r.vec3("normal")};
  r.finish();
  return p;
}

std::vector<std::int32_t> labels_from_json(const Json& j, std::size_t count, const std::string& what) {
  if (!j.is_array()) schema(what, "expected an array of labels");
  std::vector<std::int32_t> labels;
  labels.reserve(j.size());
  for (const Json& v : j) {
    if (!v.is_number_integer()) schema(what, "labels must be integers");
    const auto l = v.get<std::int64_t>();
    if (l < -1 || l >= static_cast<std::int64_t>(count)) schema(what, "label " + std::to_string(l) + " out of range");
    labels.push_back(static_cast<std::int32_t>(l));
  }
  return labels;
}

Json pr_to_json(const TypeEvaluation& e) {
  const PrReport& r = e.scores;
  Json matches = Json::array();
  for (const MatchDistance& m : e.distances)
    matches.push_back({{"truth", m.match.truth}, {"detection", m.match.detection}, {"overlap", m.match.overlap}, {"dod", m.dod}});
  return Json{{"precision", r.precision},
              {"recall", r.recall},
              {"missed_rate", r.missed_rate},
              {"noise_rate", r.noise_rate},
              {"threshold", r.threshold},
              {"detections", r.detections},
              {"truths", r.truths},
              {"correct", r.correct},
              {"over_segmented", r.over_segmented},
              {"under_segmented", r.under_segmented},
              {"missed", r.missed},
              {"noise", r.noise},
              {"mean_dod", optional_number(e.mean_dod)},
              {"mean_dod_sigma", optional_number(e.mean_dod_sigma)},
              {"matches", std::move(matches)}};
}

}  // namespace

Json primitive_to_json(const Primitive& primitive) {
  Json j = Json::object();
  write_primitive(primitive, j);
  return j;
}

Primitive primitive_from_json(const Json& j) {
  ObjectReader r(j, "primitive");
  Primitive p = read_primitive(r, "primitive");
  r.finish();
  return p;
}

Json config_to_json(const DetectorConfig& c) {
  Json types = Json::array();
  for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t)
    if (c.enabled_types[t]) types.push_back(std::string(type_name(static_cast<PrimitiveType>(t))));
  return Json{{"n_reference", c.n_reference},
              {"n_pair", c.n_pair},
              {"angle_bin_rad", c.angle_bin},
              {"radius_bin_fraction", c.radius_bin_fraction},
              {"radius_bin_count", c.radius_bin_count},
              {"max_pair_distance_fraction", c.max_pair_distance_fraction},
              {"min_votes", c.min_votes},
              {"cluster_dist_fraction", c.cluster_dist_fraction},
              {"cluster_angle_rad", c.cluster_angle},
              {"tolerances_rad",
               {{"np", c.tolerances.np()}, {"pc", c.tolerances.pc()}, {"as", c.tolerances.as()}, {"vt", c.tolerances.vt()}}},
              {"types", std::move(types)},
              {"use_vote_spreading", c.use_vote_spreading},
              {"use_bin_averaging", c.use_bin_averaging},
              {"use_cluster_averaging", c.use_cluster_averaging},
              {"per_type_extraction", c.per_type_extraction},
              {"bin_neighborhood", c.bin_neighborhood},
              {"rng_seed", c.rng_seed}};
}

DetectorConfig config_from_json(const Json& j) {
  ObjectReader r(j, "config");
  DetectorConfig c;
  r.maybe("n_reference", c.n_reference);
  r.maybe("n_pair", c.n_pair);
  r.maybe("angle_bin_rad", c.angle_bin);
  r.maybe("radius_bin_fraction", c.radius_bin_fraction);
  r.maybe("radius_bin_count", c.radius_bin_count);
  r.maybe("max_pair_distance_fraction", c.max_pair_distance_fraction);
  r.maybe("min_votes", c.min_votes);
  r.maybe("cluster_dist_fraction", c.cluster_dist_fraction);
  r.maybe("cluster_angle_rad", c.cluster_angle);
  if (r.has("tolerances_rad")) {
    ObjectReader t(r.at("tolerances_rad"), r.path("tolerances_rad"));
    c.tolerances = Tolerances(t.number("np"), t.number("pc"), t.number("as"), t.number("vt"));
    t.finish();
  }
  if (r.has("types")) {
    const Json& types = r.at("types");
    if (!types.is_array()) schema(r.path("types"), "expected an array of type names");
    c.enabled_types.fill(false);
    for (const Json& t : types) {
      if (!t.is_string()) schema(r.path("types"), "expected an array of type names");
      try {
        c.enabled_types[static_cast<std::size_t>(parse_type_name(t.get<std::string>()))] = true;
      } catch (const std::invalid_argument&) {
        schema(r.path("types"), "unknown primitive type '" + t.get<std::string>() + "'");
      }
    }
  }
  r.maybe("use_vote_spreading", c.use_vote_spreading);
  r.maybe("use_bin_averaging", c.use_bin_averaging);
  r.maybe("use_cluster_averaging", c.use_cluster_averaging);
  r.maybe("per_type_extraction", c.per_type_extraction);
  if (r.has("bin_neighborhood")) c.bin_neighborhood = static_cast<int>(r.count("bin_neighborhood"));
  if (r.has("rng_seed")) c.rng_seed = r.count("rng_seed");
  r.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    schema("config", e.what());
  }
  return c;
}

Json report_to_json(const DetectionReport& report, bool include_timing) {
  Json primitives = Json::array();
  for (const DetectedPrimitive& d : report.primitives) {
    Json p = Json::object();
    write_primitive(d.primitive, p);
    p["vote_mass"] = d.vote_mass;
    p["support"] = d.support;
    p["reference"] = point_to_json(d.reference);
    primitives.push_back(std::move(p));
  }
  Json j{{"scene_diameter", report.scene_diameter},
         {"reference_count", report.reference_count},
         {"candidate_count", report.candidate_count},
         {"config", config_to_json(report.config)},
         {"primitives", std::move(primitives)}};
  if (include_timing) {
    const StageTimings& t = report.timing;
    j["timing_ms"] = {{"voting", t.voting_ms}, {"clustering", t.clustering_ms}, {"inliers", t.inliers_ms}, {"total", t.total_ms}};
  }
  return j;
}

DetectionReport report_from_json(const Json& j) {
  ObjectReader r(j, "report");
  DetectionReport report;
  report.scene_diameter = r.number("scene_diameter");
  report.reference_count = static_cast<std::size_t>(r.count("reference_count"));
  report.candidate_count = static_cast<std::size_t>(r.count("candidate_count"));
  report.config = config_from_json(r.at("config"));
  const Json& list = r.at("primitives");
  if (!list.is_array()) schema("report.primitives", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string what = "report.primitives[" + std::to_string(i) + "]";
    ObjectReader p(list[i], what);
    DetectedPrimitive d;
    d.primitive = read_primitive(p, what);
    d.vote_mass = p.number("vote_mass");
    d.support = static_cast<std::size_t>(p.count("support"));
    d.reference = point_from_json(p.at("reference"), what + ".reference");
    p.finish();
    report.primitives.push_back(std::move(d));
  }
  if (r.has("timing_ms")) {
    ObjectReader t(r.at("timing_ms"), "report.timing_ms");
    report.timing = {t.number("voting"), t.number("clustering"), t.number("inliers"), t.number("total")};
    t.finish();
  }
  r.finish();
  return report;
}

Json truth_to_json(const GroundTruth& truth) {
  Json primitives = Json::array();
  for (const Primitive& p : truth.primitives) primitives.push_back(primitive_to_json(p));
  return Json{{"noise_sigma", truth.noise_sigma},
              {"scene_diameter", truth.scene_diameter},
              {"primitives", std::move(primitives)},
              {"labels", truth.labels}};
}

GroundTruth truth_from_json(const Json& j) {
  ObjectReader r(j, "ground_truth");
  GroundTruth truth;
  truth.noise_sigma = r.number("noise_sigma");
  truth.scene_diameter = r.number("scene_diameter");
  const Json& list = r.at("primitives");
  if (!list.is_array()) schema("ground_truth.primitives", "expected an array");
  for (const Json& p : list) truth.primitives.push_back(primitive_from_json(p));
  truth.labels = labels_from_json(r.at("labels"), truth.primitives.size(), "ground_truth.labels");
  r.finish();
  return truth;
}

Json spec_to_json(const SceneSpec& spec) {
  Json counts = Json::object();
  for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t)
    counts[std::string(type_name(static_cast<PrimitiveType>(t)))] = spec.counts[t];
  const Eigen::Matrix3d rot = spec.camera.pose.linear();
  Json rotation = Json::array();
  for (int i = 0; i < 3; ++i) rotation.push_back({rot(i, 0), rot(i, 1), rot(i, 2)});
  const ParameterRanges& g = spec.ranges;
  return Json{{"counts", std::move(counts)},
              {"noise_sigma", spec.noise_sigma},
              {"normal_jitter_deg", spec.normal_jitter / kDeg},
              {"rng_seed", spec.rng_seed},
              {"camera",
               {{"width", spec.camera.width},
                {"height", spec.camera.height},
                {"vertical_fov_deg", spec.camera.vertical_fov / kDeg},
                {"position", vec(spec.camera.origin())},
                {"rotation", std::move(rotation)}}},
              {"ranges",
               {{"scale", g.scale},
                {"radius_min", g.radius_min},
                {"radius_max", g.radius_max},
                {"cone_angle_min_deg", g.cone_angle_min / kDeg},
                {"cone_angle_max_deg", g.cone_angle_max / kDeg},
                {"height_min", g.height_min},
                {"height_max", g.height_max},
                {"plane_radius_min", g.plane_radius_min},
                {"plane_radius_max", g.plane_radius_max},
                {"box_x", g.box_x},
                {"box_y", g.box_y},
                {"box_z", g.box_z}}}};
}

SceneSpec spec_from_json(const Json& j) {
  ObjectReader r(j, "spec");
  SceneSpec spec;
  {
    ObjectReader c(r.at("counts"), "spec.counts");
    for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t) {
      const std::string name(type_name(static_cast<PrimitiveType>(t)));
      if (c.has(name)) spec.counts[t] = static_cast<int>(std::min<std::uint64_t>(c.count(name), 1000));
    }
    c.finish();
  }
  r.maybe("noise_sigma", spec.noise_sigma);
  if (r.has("normal_jitter_deg")) spec.normal_jitter = r.number("normal_jitter_deg") * kDeg;
  if (r.has("rng_seed")) spec.rng_seed = r.count("rng_seed");
  if (r.has("camera")) {
    ObjectReader c(r.at("camera"), "spec.camera");
    if (c.has("width")) spec.camera.width = static_cast<int>(std::min<std::uint64_t>(c.count("width"), 1u << 20));
    if (c.has("height")) spec.camera.height = static_cast<int>(std::min<std::uint64_t>(c.count("height"), 1u << 20));
    if (c.has("vertical_fov_deg")) spec.camera.vertical_fov = c.number("vertical_fov_deg") * kDeg;
    if (c.has("position")) spec.camera.pose.translation() = c.vec3("position");
    if (c.has("rotation")) {
      const Json& m = c.at("rotation");
      Eigen::Matrix3d rot;
      if (!m.is_array() || m.size() != 3) schema("spec.camera.rotation", "expected 3 rows of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!m[i].is_array() || m[i].size() != 3) schema("spec.camera.rotation", "expected 3 rows of 3 numbers");
        for (std::size_t k = 0; k < 3; ++k) {
          if (!m[i][k].is_number()) schema("spec.camera.rotation", "expected 3 rows of 3 numbers");
          rot(static_cast<int>(i), static_cast<int>(k)) = m[i][k].get<double>();
        }
      }
      if (!(rot.transpose() * rot).isIdentity(1e-9) || std::abs(rot.determinant() - 1.0) > 1e-9)
        schema("spec.camera.rotation", "not a rotation matrix");
      spec.camera.pose.linear() = rot;
    }
    c.finish();
  }
  if (r.has("ranges")) {
    ObjectReader g(r.at("ranges"), "spec.ranges");
    ParameterRanges& p = spec.ranges;
    g.maybe("scale", p.scale);
    g.maybe("radius_min", p.radius_min);
    g.maybe("radius_max", p.radius_max);
    if (g.has("cone_angle_min_deg")) p.cone_angle_min = g.number("cone_angle_min_deg") * kDeg;
    if (g.has("cone_angle_max_deg")) p.cone_angle_max = g.number("cone_angle_max_deg") * kDeg;
    g.maybe("height_min", p.height_min);
    g.maybe("height_max", p.height_max);
    g.maybe("plane_radius_min", p.plane_radius_min);
    g.maybe("plane_radius_max", p.plane_radius_max);
    if (g.has("box_x")) p.box_x = g.pair("box_x");
    if (g.has("box_y")) p.box_y = g.pair("box_y");
    if (g.has("box_z")) p.box_z = g.pair("box_z");
    g.finish();
  }
  r.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    schema("spec", e.what());
  }
  return spec;
}

Json evaluation_to_json(const Evaluation& evaluation) {
  Json per_type = Json::object();
  for (std::size_t t = 0; t < kPrimitiveTypeCount; ++t)
    per_type[std::string(type_name(static_cast<PrimitiveType>(t)))] = pr_to_json(evaluation.per_type[t]);
  return Json{{"overall", pr_to_json(evaluation.overall)},
              {"per_type", std::move(per_type)},
              {"p_coverage_mean_error", finite_or_null(evaluation.p_coverage.mean_error)},
              {"s_coverage_mean_error",
               evaluation.s_coverage.value.empty() ? Json(nullptr) : finite_or_null(evaluation.s_coverage.mean_error)}};
}

std::string coverage_csv(const Evaluation& evaluation) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "epsilon,p_coverage,s_coverage\n";
  const CoverageCurve& p = evaluation.p_coverage;
  const CoverageCurve& s = evaluation.s_coverage;
  for (std::size_t i = 0; i < p.epsilon.size(); ++i) {
    out << p.epsilon[i] << ',' << p.value[i] << ',';
    if (i < s.value.size()) out << s.value[i];
    out << '\n';
  }
  return out.str();
}

std::string labels_csv(std::span<const std::int32_t> labels) {
  std::string out = "point,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i) + ',' + std::to_string(labels[i]) + '\n';
  return out;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace primvote
