#pragma once

#include "primvote/geometry.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace primvote {

/// The file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file was readable but its content is malformed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CloudFormat { kAuto, kPlyAscii, kPlyBinary, kXyzn };

/// Reads oriented points. kAuto picks PLY for a .ply extension (ascii or
/// binary from the header) and XYZN text otherwise. Normals within 1e-3 of
/// unit length are renormalized; anything else is rejected.
PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format = CloudFormat::kAuto);

/// PLY is written with double properties, XYZN with round-trip precision.
/// kAuto writes binary PLY for .ply and XYZN otherwise.
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format = CloudFormat::kAuto);

/// In-memory variants; `source` names the input in error messages.
PointCloud parse_ply(const std::string& bytes, const std::string& source = "ply");
PointCloud parse_xyzn(const std::string& text, const std::string& source = "xyzn");
std::string format_ply(const PointCloud& cloud, bool binary);
std::string format_xyzn(const PointCloud& cloud);

}  // namespace primvote
