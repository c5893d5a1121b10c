#pragma once

#include "primvote/cloud_io.hpp"
#include "primvote/datagen.hpp"
#include "primvote/detector.hpp"
#include "primvote/eval.hpp"
#include "primvote/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace primvote {

using Json = nlohmann::json;

// Every *_from_json throws FormatError on a schema violation: unknown or
// missing keys, wrong value types, or values that break a type invariant.
// Numbers are written in shortest round-trip form, so doubles survive a
// write / read cycle bit for bit.

Json primitive_to_json(const Primitive& primitive);
Primitive primitive_from_json(const Json& j);

Json config_to_json(const DetectorConfig& config);
DetectorConfig config_from_json(const Json& j);

/// Inlier labels are not stored; they follow from the primitives, the cloud
/// and the config. Timing is written only on request.
Json report_to_json(const DetectionReport& report, bool include_timing = false);
DetectionReport report_from_json(const Json& j);

Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);

/// Missing keys keep their defaults; angles are given in degrees.
Json spec_to_json(const SceneSpec& spec);
SceneSpec spec_from_json(const Json& j);

Json evaluation_to_json(const Evaluation& evaluation);

/// epsilon, p-coverage and s-coverage per row; s-coverage is left empty when
/// no primitive has inliers.
std::string coverage_csv(const Evaluation& evaluation);
std::string labels_csv(std::span<const std::int32_t> labels);

Json read_json(const std::filesystem::path& path);
/// Two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace primvote
