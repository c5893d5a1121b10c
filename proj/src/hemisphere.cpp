#include "primvote/hemisphere.hpp"

#include "primvote/ppf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace primvote {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Wraps to (-pi, pi].
double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a > M_PI) a -= kTwoPi;
  if (a <= -M_PI) a += kTwoPi;
  return a;
}

double wrap_positive(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

Vec3 from_spherical(double colatitude, double longitude) {
  const double s = std::sin(colatitude);
  return {s * std::cos(longitude), s * std::sin(longitude), std::cos(colatitude)};
}

double colatitude_of(const Vec3& d) { return std::atan2(std::hypot(d.x(), d.y()), d.z()); }

double longitude_of(const Vec3& d) { return wrap_positive(std::atan2(d.y(), d.x())); }

}  // namespace

HemisphereGrid::HemisphereGrid(double angle_bin) {
  if (!(angle_bin > 0.0 && angle_bin < M_PI / 2))
    throw std::invalid_argument("hemisphere grid needs an angle bin in (0, pi/2)");
  // A polar cap of angular diameter `band` has about the area of an
  // angle_bin x angle_bin square.
  const double target_band = 2.0 * angle_bin / std::sqrt(M_PI);
  const int rings = std::max(1, static_cast<int>(std::ceil(M_PI / 2 / target_band - 0.5)));
  band_ = (M_PI / 2) / (rings + 0.5);

  const double cap_area = kTwoPi * (1.0 - std::cos(band_ / 2));
  ring_sizes_.push_back(1);
  for (int k = 1; k <= rings; ++k) {
    const double area = kTwoPi * (std::cos((k - 0.5) * band_) - std::cos(std::min(M_PI / 2, (k + 0.5) * band_)));
    int n = static_cast<int>(std::lround(area / cap_area));
    if (k == rings) n = 2 * static_cast<int>(std::lround(area / (2.0 * cap_area)));
    ring_sizes_.push_back(std::max(k == rings ? 2 : 1, n));
  }

  for (int k = 0; k < ring_count(); ++k) {
    ring_start_.push_back(static_cast<std::uint32_t>(cells_.size()));
    const int n = ring_sizes_[static_cast<std::size_t>(k)];
    const double lo = std::max(0.0, (k - 0.5) * band_);
    const double hi = std::min(M_PI / 2, (k + 0.5) * band_);
    const double area = kTwoPi * (std::cos(lo) - std::cos(hi)) / n;
    for (int j = 0; j < n; ++j) {
      Cell c;
      c.ring = k;
      c.index = j;
      c.colatitude = k * band_;
      c.longitude = k == 0 ? 0.0 : j * kTwoPi / n;
      c.solid_angle = area;
      c.center = from_spherical(c.colatitude, c.longitude);
      cells_.push_back(c);
    }
  }

  // 1-ring adjacency wide enough to contain every interpolation stencil whose
  // largest weight falls on the cell.
  const int last = ring_count() - 1;
  for (std::uint32_t id = 0; id < cells_.size(); ++id) {
    neighbor_start_.push_back(static_cast<std::uint32_t>(neighbor_list_.size()));
    const Cell& c = cells_[id];
    if (c.ring == 0) {
      for (int j = 0; j < ring_size(1); ++j) neighbor_list_.push_back({ring_start(1) + j, false});
      continue;
    }
    const int n = ring_size(c.ring);
    const double spacing = kTwoPi / n;
    if (n >= 2) {
      const auto prev = ring_start(c.ring) + static_cast<std::uint32_t>((c.index + n - 1) % n);
      const auto next = ring_start(c.ring) + static_cast<std::uint32_t>((c.index + 1) % n);
      neighbor_list_.push_back({prev, false});
      if (next != prev) neighbor_list_.push_back({next, false});
    }
    auto add_ring = [&](int ring, bool mirrored) {
      const int m = ring_size(ring);
      const double window = spacing / 2 + kTwoPi / m + 1e-9;
      for (int j = 0; j < m; ++j) {
        const std::uint32_t other = ring_start(ring) + static_cast<std::uint32_t>(j);
        const double lon = cells_[other].longitude + (mirrored ? M_PI : 0.0);
        if (std::abs(wrap_angle(lon - c.longitude)) <= window) neighbor_list_.push_back({other, mirrored});
      }
    };
    if (c.ring == 1) {
      neighbor_list_.push_back({0, false});
    } else {
      add_ring(c.ring - 1, false);
    }
    if (c.ring < last) {
      add_ring(c.ring + 1, false);
    } else {
      add_ring(c.ring, true);
    }
  }
  neighbor_start_.push_back(static_cast<std::uint32_t>(neighbor_list_.size()));
}

std::span<const HemisphereGrid::Neighbor> HemisphereGrid::neighbors(std::uint32_t id) const {
  return std::span<const Neighbor>(neighbor_list_).subspan(neighbor_start_[id],
                                                           neighbor_start_[id + 1] - neighbor_start_[id]);
}

double HemisphereGrid::cell_angular_radius(std::uint32_t id) const {
  const Cell& c = cells_[id];
  if (c.ring == 0) return band_ / 2;
  const double half_lon = M_PI / ring_size(c.ring);
  const double lo = (c.ring - 0.5) * band_;
  const double hi = std::min(M_PI / 2, (c.ring + 0.5) * band_);
  double radius = 0.0;
  for (double colat : {lo, c.colatitude, hi}) {
    for (double dlon : {-half_lon, 0.0, half_lon}) {
      const Vec3 p = from_spherical(colat, c.longitude + dlon);
      radius = std::max(radius, std::acos(std::clamp(p.dot(c.center), -1.0, 1.0)));
    }
  }
  return radius;
}

HemisphereGrid::Location HemisphereGrid::lookup(const Vec3& direction) const {
  const Vec3 d = canonical_hemisphere(direction);
  const double colat = colatitude_of(d);
  const double lon = longitude_of(d);
  const int k = std::min(ring_count() - 1, static_cast<int>(std::floor(colat / band_ + 0.5)));
  if (k == 0) return Location{0, colat * std::cos(lon), colat * std::sin(lon)};
  const int n = ring_size(k);
  const int j = static_cast<int>(std::floor(lon / (kTwoPi / n) + 0.5)) % n;
  const std::uint32_t id = ring_start(k) + static_cast<std::uint32_t>(j);
  return Location{id, colat - cells_[id].colatitude, wrap_angle(lon - cells_[id].longitude)};
}

void HemisphereGrid::bracket(int ring, double longitude, std::uint32_t& first, std::uint32_t& second,
                             double& fraction) const {
  const int n = ring_size(ring);
  const double u = wrap_positive(longitude) / (kTwoPi / n);
  const double lower = std::floor(u);
  fraction = u - lower;
  const int j0 = static_cast<int>(lower) % n;
  first = ring_start(ring) + static_cast<std::uint32_t>(j0);
  second = ring_start(ring) + static_cast<std::uint32_t>((j0 + 1) % n);
}

HemisphereGrid::Stencil HemisphereGrid::stencil(const Vec3& direction) const {
  const Vec3 d = canonical_hemisphere(direction);
  const double colat = colatitude_of(d);
  const double lon = longitude_of(d);
  const int last = ring_count() - 1;
  const double t = colat / band_;
  const int k0 = std::min(last, static_cast<int>(std::floor(t)));
  const double f = t - k0;

  Stencil s;
  auto push = [&s](std::uint32_t cell, double w) {
    if (w > 0.0) {
      s.cells[static_cast<std::size_t>(s.size)] = cell;
      s.weights[static_cast<std::size_t>(s.size)] = w;
      ++s.size;
    }
  };
  std::uint32_t a = 0, b = 0;
  double g = 0.0;
  if (k0 == 0) {
    push(0, 1.0 - f);
  } else {
    bracket(k0, lon, a, b, g);
    push(a, (1.0 - f) * (1.0 - g));
    push(b, (1.0 - f) * g);
  }
  if (k0 < last) {
    bracket(k0 + 1, lon, a, b, g);
  } else {
    bracket(last, lon + M_PI, a, b, g);  // the antipodal copy of the last ring
  }
  push(a, f * (1.0 - g));
  push(b, f * g);
  return s;
}

Vec3 HemisphereGrid::flat_chart_average(std::uint32_t center, double center_mass,
                                        std::span<const double> neighbor_mass) const {
  Eigen::Vector2d moment = Eigen::Vector2d::Zero();
  double mass = 0.0;
  auto add = [&](std::uint32_t id, double m) {
    const Cell& c = cells_[id];
    if (c.ring > 1) return;
    if (c.ring == 1) moment += m * band_ * Eigen::Vector2d(std::cos(c.longitude), std::sin(c.longitude));
    mass += m;
  };
  add(center, center_mass);
  const auto nb = neighbors(center);
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (!nb[i].mirrored) add(nb[i].cell, neighbor_mass[i]);
  }
  if (!(mass > 0.0)) return cells_[center].center;
  const Eigen::Vector2d chart = moment / mass;
  if (chart.norm() < 1e-15) return Vec3::UnitZ();

  // Invert the piecewise-linear chart inside the fan triangle (pole, c0, c1).
  std::uint32_t a = 0, b = 0;
  double unused = 0.0;
  bracket(1, std::atan2(chart.y(), chart.x()), a, b, unused);
  const Cell& ca = cells_[a];
  const Cell& cb = cells_[b];
  Eigen::Matrix2d basis;
  basis.col(0) = band_ * Eigen::Vector2d(std::cos(ca.longitude), std::sin(ca.longitude));
  basis.col(1) = band_ * Eigen::Vector2d(std::cos(cb.longitude), std::sin(cb.longitude));
  const Eigen::Vector2d coeff = basis.colPivHouseholderQr().solve(chart);
  const double f = coeff.sum();
  const double g = f > 0.0 ? coeff.y() / f : 0.0;
  const double spacing = kTwoPi / ring_size(1);
  return canonical_hemisphere(from_spherical(f * band_, ca.longitude + g * spacing));
}

Vec3 HemisphereGrid::average_direction(std::uint32_t center, double center_mass,
                                       std::span<const double> neighbor_mass) const {
  const Cell& c = cells_[center];
  const auto nb = neighbors(center);
  if (c.ring == 0) return flat_chart_average(center, center_mass, neighbor_mass);
  if (c.ring == 1) {
    // Votes near ring 1 came either from the polar fan or from the band
    // towards ring 2; whichever side holds more mass picks the chart.
    double pole_mass = 0.0, outer_mass = 0.0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const int ring = cells_[nb[i].cell].ring;
      if (ring == 0) pole_mass += neighbor_mass[i];
      if (ring == 2 || nb[i].mirrored) outer_mass += neighbor_mass[i];
    }
    if (pole_mass > outer_mass) return flat_chart_average(center, center_mass, neighbor_mass);
  }

  double mass = center_mass;
  double colat_moment = center_mass * c.colatitude;
  double lon_moment = center_mass * c.longitude;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const Cell& other = cells_[nb[i].cell];
    if (other.ring == 0) continue;
    const double m = neighbor_mass[i];
    const double colat = nb[i].mirrored ? M_PI - other.colatitude : other.colatitude;
    const double lon = other.longitude + (nb[i].mirrored ? M_PI : 0.0);
    mass += m;
    colat_moment += m * colat;
    lon_moment += m * (c.longitude + wrap_angle(lon - c.longitude));
  }
  if (!(mass > 0.0)) return c.center;
  return canonical_hemisphere(from_spherical(colat_moment / mass, lon_moment / mass));
}

ConeAccumulator::ConeAccumulator(double s_bin_width, std::size_t s_bins, double angle_bin)
    : s_axis_(s_bin_width, s_bins), grid_(angle_bin), bins_(s_bins * grid_.cell_count(), 0.0) {}

void ConeAccumulator::reset() {
  std::fill(bins_.begin(), bins_.end(), 0.0);
  dropped_ = 0;
  argmax_ = 0;
  max_ = 0.0;
}

void ConeAccumulator::bump(std::size_t s_bin, std::uint32_t cell, double w) {
  const std::size_t k = s_bin * grid_.cell_count() + cell;
  bins_[k] += w;
  if (bins_[k] > max_) {
    max_ = bins_[k];
    argmax_ = k;
  }
}

bool ConeAccumulator::spread(double s_r, const Vec3& axis, double weight) {
  if (!s_axis_.in_range(s_r)) {
    ++dropped_;
    return false;
  }
  const LinearSplit s = s_axis_.split(s_r);
  const HemisphereGrid::Stencil st = grid_.stencil(axis);
  const double w_lower = weight * (1.0 - s.upper_fraction);
  const double w_upper = weight * s.upper_fraction;
  for (int i = 0; i < st.size; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    bump(s.lower, st.cells[idx], w_lower * st.weights[idx]);
    if (s.upper != s.lower) bump(s.upper, st.cells[idx], w_upper * st.weights[idx]);
  }
  return true;
}

bool ConeAccumulator::add_nearest(double s_r, const Vec3& axis, double weight) {
  if (!s_axis_.in_range(s_r)) {
    ++dropped_;
    return false;
  }
  bump(s_axis_.nearest(s_r), grid_.lookup(axis).cell, weight);
  return true;
}

double ConeAccumulator::total_mass() const {
  double sum = 0.0;
  for (double b : bins_) sum += b;
  return sum;
}

std::optional<ConePeak> ConeAccumulator::extract_max(const ExtractOptions& options) const {
  if (!(max_ > options.min_mass)) return std::nullopt;
  const std::size_t cells = grid_.cell_count();
  const auto si = static_cast<std::ptrdiff_t>(argmax_ / cells);
  const auto ci = static_cast<std::uint32_t>(argmax_ % cells);
  const auto nb = grid_.neighbors(ci);
  const auto last = static_cast<std::ptrdiff_t>(s_axis_.bin_count()) - 1;

  std::vector<double> neighbor_mass(nb.size(), 0.0);
  double center_mass = 0.0, mass = 0.0, s_moment = 0.0;
  for (auto s = std::max<std::ptrdiff_t>(0, si - options.neighborhood);
       s <= std::min(last, si + options.neighborhood); ++s) {
    const auto sb = static_cast<std::size_t>(s);
    const double sc = s_axis_.center(sb);
    const double m0 = at(sb, ci);
    center_mass += m0;
    double slice = m0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const double m = at(sb, nb[i].cell);
      neighbor_mass[i] += m;
      slice += m;
    }
    mass += slice;
    s_moment += slice * sc;
  }
  if (!options.bin_averaging)
    return ConePeak{s_axis_.center(static_cast<std::size_t>(si)), grid_.cell(ci).center, max_, mass};
  return ConePeak{s_moment / mass, grid_.average_direction(ci, center_mass, neighbor_mass), max_, mass};
}

}  // namespace primvote
