#include "primvote/cloud_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>
#include <vector>

namespace primvote {

namespace {

constexpr double kNormalTolerance = 1e-3;

enum class Scalar { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<Scalar> parse_scalar(std::string_view name) {
  static constexpr std::array<std::pair<std::string_view, Scalar>, 16> kNames{{
      {"char", Scalar::kInt8},     {"int8", Scalar::kInt8},       {"uchar", Scalar::kUint8},
      {"uint8", Scalar::kUint8},   {"short", Scalar::kInt16},     {"int16", Scalar::kInt16},
      {"ushort", Scalar::kUint16}, {"uint16", Scalar::kUint16},   {"int", Scalar::kInt32},
      {"int32", Scalar::kInt32},   {"uint", Scalar::kUint32},     {"uint32", Scalar::kUint32},
      {"float", Scalar::kFloat32}, {"float32", Scalar::kFloat32}, {"double", Scalar::kFloat64},
      {"float64", Scalar::kFloat64},
  }};
  for (const auto& [n, s] : kNames)
    if (n == name) return s;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kInt8:
    case Scalar::kUint8: return 1;
    case Scalar::kInt16:
    case Scalar::kUint16: return 2;
    case Scalar::kInt32:
    case Scalar::kUint32:
    case Scalar::kFloat32: return 4;
    case Scalar::kFloat64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kFloat32;
  bool list = false;
  Scalar count_type = Scalar::kUint8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::optional<double> to_double(std::string_view token) {
  double v = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> to_count(std::string_view token) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size()) return std::nullopt;
  return v;
}

// Pulls lines out of a buffer, tracking 1-based line numbers and the offset
// just past the last consumed line.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::optional<std::string_view> next() {
    if (offset_ >= text_.size()) return std::nullopt;
    const std::size_t end = std::min(text_.find('\n', offset_), text_.size());
    std::string_view line = text_.substr(offset_, end - offset_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    offset_ = end + 1;
    ++line_;
    return line;
  }
  std::size_t line() const { return line_; }
  std::size_t offset() const { return std::min(offset_, text_.size()); }

 private:
  std::string_view text_;
  std::size_t offset_ = 0;
  std::size_t line_ = 0;
};

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& message) {
  throw FormatError(source + ":" + std::to_string(line) + ": " + message);
}

// Renormalizes near-unit normals; `where(i)` describes point i for errors.
template <typename Where>
void check_normals(std::vector<OrientedPoint>& points, Where where) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    OrientedPoint& p = points[i];
    if (!p.position.allFinite() || !p.normal.allFinite()) throw FormatError(where(i) + ": non-finite value");
    const double length = p.normal.norm();
    if (std::abs(length - 1.0) > kNormalTolerance) {
      std::ostringstream msg;
      msg << where(i) << ": normal length " << length << " is not within " << kNormalTolerance << " of 1";
      throw FormatError(msg.str());
    }
    // Unit normals keep their bits so write / read cycles are exact.
    if (std::abs(length - 1.0) > 1e-12) p.normal /= length;
  }
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

double load_scalar(const char* p, Scalar s) {
  switch (s) {
    case Scalar::kInt8: return load<std::int8_t>(p);
    case Scalar::kUint8: return load<std::uint8_t>(p);
    case Scalar::kInt16: return load<std::int16_t>(p);
    case Scalar::kUint16: return load<std::uint16_t>(p);
    case Scalar::kInt32: return load<std::int32_t>(p);
    case Scalar::kUint32: return load<std::uint32_t>(p);
    case Scalar::kFloat32: return load<float>(p);
    case Scalar::kFloat64: return load<double>(p);
  }
  return 0.0;
}

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

template <typename T>
void store(std::string& out, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return buffer.str();
}

bool is_ply(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ply";
}

}  // namespace

PointCloud parse_ply(const std::string& bytes, const std::string& source) {
  LineReader reader(bytes);
  auto magic = reader.next();
  if (!magic || *magic != "ply") fail(source, 1, "not a PLY file");

  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  for (;;) {
    const auto line = reader.next();
    if (!line) fail(source, reader.line(), "header ends without end_header");
    const auto tok = split(*line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() != 3) fail(source, reader.line(), "malformed format line");
      if (tok[1] == "ascii") binary = false;
      else if (tok[1] == "binary_little_endian") binary = true;
      else if (tok[1] == "binary_big_endian") fail(source, reader.line(), "big-endian PLY is not supported");
      else fail(source, reader.line(), "unknown PLY format '" + std::string(tok[1]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      const auto count = tok.size() == 3 ? to_count(tok[2]) : std::nullopt;
      if (!count) fail(source, reader.line(), "malformed element line");
      elements.push_back({std::string(tok[1]), *count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) fail(source, reader.line(), "property before any element");
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = parse_scalar(tok[2]);
        const auto vt = parse_scalar(tok[3]);
        if (!ct || !vt) fail(source, reader.line(), "unknown list property type");
        prop = {std::string(tok[4]), *vt, true, *ct};
      } else if (tok.size() == 3) {
        const auto t = parse_scalar(tok[1]);
        if (!t) fail(source, reader.line(), "unknown property type '" + std::string(tok[1]) + "'");
        prop = {std::string(tok[2]), *t, false, Scalar::kUint8};
      } else {
        fail(source, reader.line(), "malformed property line");
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      fail(source, reader.line(), "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) fail(source, reader.line(), "missing format line");

  const auto vertex_it = std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw FormatError(source + ": no vertex element");
  const Element& vertex = *vertex_it;
  static constexpr std::array<std::string_view, 6> kFields{"x", "y", "z", "nx", "ny", "nz"};
  std::array<std::size_t, 6> slot{};
  for (std::size_t f = 0; f < kFields.size(); ++f) {
    const auto it = std::find_if(vertex.properties.begin(), vertex.properties.end(),
                                 [&](const Property& p) { return p.name == kFields[f]; });
    if (it == vertex.properties.end()) {
      if (f >= 3) throw FormatError(source + ": normals required (vertex properties nx, ny, nz)");
      throw FormatError(source + ": vertex property '" + std::string(kFields[f]) + "' missing");
    }
    if (it->list || (it->type != Scalar::kFloat32 && it->type != Scalar::kFloat64))
      throw FormatError(source + ": vertex property '" + it->name + "' must be float or double");
    slot[f] = static_cast<std::size_t>(it - vertex.properties.begin());
  }

  std::vector<OrientedPoint> points(vertex.count);
  std::vector<double> values;
  auto assign = [&](std::size_t i) {
    points[i].position = Vec3(values[slot[0]], values[slot[1]], values[slot[2]]);
    points[i].normal = Vec3(values[slot[3]], values[slot[4]], values[slot[5]]);
  };

  if (!binary) {
    std::vector<std::size_t> lines(vertex.count);
    for (const Element& e : elements) {
      const bool is_vertex = &e == &vertex;
      for (std::size_t i = 0; i < e.count; ++i) {
        const auto line = reader.next();
        if (!line) fail(source, reader.line() + 1, "unexpected end of file in element '" + e.name + "'");
        if (!is_vertex) continue;
        const auto tok = split(*line);
        values.assign(e.properties.size(), 0.0);
        std::size_t t = 0;
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          if (t >= tok.size()) fail(source, reader.line(), "too few values");
          if (e.properties[k].list) {
            const auto n = to_count(tok[t++]);
            if (!n || t + *n > tok.size()) fail(source, reader.line(), "malformed list value");
            t += *n;
            continue;
          }
          const auto v = to_double(tok[t++]);
          if (!v) fail(source, reader.line(), "malformed number '" + std::string(tok[t - 1]) + "'");
          values[k] = *v;
        }
        if (t != tok.size()) fail(source, reader.line(), "too many values");
        assign(i);
        lines[i] = reader.line();
      }
    }
    check_normals(points, [&](std::size_t i) { return source + ":" + std::to_string(lines[i]); });
    return PointCloud(std::move(points));
  }

  const char* p = bytes.data() + reader.offset();
  const char* end = bytes.data() + bytes.size();
  auto need = [&](std::size_t n) {
    if (static_cast<std::size_t>(end - p) < n) throw FormatError(source + ": truncated binary body");
  };
  for (const Element& e : elements) {
    const bool is_vertex = &e == &vertex;
    for (std::size_t i = 0; i < e.count; ++i) {
      if (is_vertex) values.assign(e.properties.size(), 0.0);
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& prop = e.properties[k];
        if (prop.list) {
          need(scalar_size(prop.count_type));
          const double n = load_scalar(p, prop.count_type);
          p += scalar_size(prop.count_type);
          if (!(n >= 0.0)) throw FormatError(source + ": negative list length");
          const auto bytes_needed = static_cast<std::size_t>(n) * scalar_size(prop.type);
          need(bytes_needed);
          p += bytes_needed;
          continue;
        }
        need(scalar_size(prop.type));
        if (is_vertex) values[k] = load_scalar(p, prop.type);
        p += scalar_size(prop.type);
      }
      if (is_vertex) assign(i);
    }
  }
  check_normals(points, [&](std::size_t i) { return source + ": vertex " + std::to_string(i); });
  return PointCloud(std::move(points));
}

PointCloud parse_xyzn(const std::string& text, const std::string& source) {
  LineReader reader(text);
  std::vector<OrientedPoint> points;
  std::vector<std::size_t> lines;
  while (const auto line = reader.next()) {
    const auto tok = split(*line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() == 3) fail(source, reader.line(), "normals required (expected x y z nx ny nz)");
    if (tok.size() != 6) fail(source, reader.line(), "expected 6 values, found " + std::to_string(tok.size()));
    std::array<double, 6> v{};
    for (std::size_t k = 0; k < 6; ++k) {
      const auto d = to_double(tok[k]);
      if (!d) fail(source, reader.line(), "malformed number '" + std::string(tok[k]) + "'");
      v[k] = *d;
    }
    points.push_back({Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])});
    lines.push_back(reader.line());
  }
  check_normals(points, [&](std::size_t i) { return source + ":" + std::to_string(lines[i]); });
  return PointCloud(std::move(points));
}

std::string format_ply(const PointCloud& cloud, bool binary) {
  std::string out = "ply\nformat ";
  out += binary ? "binary_little_endian" : "ascii";
  out += " 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz"}) out += std::string("property double ") + name + "\n";
  out += "end_header\n";
  for (const OrientedPoint& p : cloud.points()) {
    const std::array<double, 6> v{p.position.x(), p.position.y(), p.position.z(),
                                  p.normal.x(),   p.normal.y(),   p.normal.z()};
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (binary) {
        store(out, v[k]);
      } else {
        if (k > 0) out += ' ';
        append_double(out, v[k]);
      }
    }
    if (!binary) out += '\n';
  }
  return out;
}

std::string format_xyzn(const PointCloud& cloud) {
  std::string out;
  for (const OrientedPoint& p : cloud.points()) {
    const std::array<double, 6> v{p.position.x(), p.position.y(), p.position.z(),
                                  p.normal.x(),   p.normal.y(),   p.normal.z()};
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k > 0) out += ' ';
      append_double(out, v[k]);
    }
    out += '\n';
  }
  return out;
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string bytes = read_file(path);
  const std::string source = path.string();
  if (format == CloudFormat::kAuto) format = is_ply(path) ? CloudFormat::kPlyBinary : CloudFormat::kXyzn;
  // The header decides between ascii and binary PLY.
  if (format == CloudFormat::kXyzn) return parse_xyzn(bytes, source);
  return parse_ply(bytes, source);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format) {
  if (format == CloudFormat::kAuto) format = is_ply(path) ? CloudFormat::kPlyBinary : CloudFormat::kXyzn;
  const std::string bytes =
      format == CloudFormat::kXyzn ? format_xyzn(cloud) : format_ply(cloud, format == CloudFormat::kPlyBinary);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace primvote
