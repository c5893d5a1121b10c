#pragma once

#include "primvote/accumulator.hpp"
#include "primvote/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace primvote {

/// Near-equal-area discretization of the upper hemisphere, with v and -v
/// identified. Ring 0 is a polar cap; ring k >= 1 holds cells whose centers
/// sit at colatitude k * band_width and evenly spaced longitudes (the first
/// at longitude 0). The last ring ends exactly at the equator and has an even
/// cell count, so its cells border their own antipodal partners.
///
/// Interpolation is bilinear in (colatitude, longitude) between the two rings
/// bracketing a direction. Between the pole and ring 1 the longitude is
/// meaningless, so parameters are averaged in a flat azimuthal chart there
/// (x, y) = colatitude * (cos lon, sin lon), in which the interpolation weights
/// are barycentric.
class HemisphereGrid {
 public:
  struct Cell {
    int ring = 0;
    int index = 0;          // within the ring
    double colatitude = 0.0;
    double longitude = 0.0;
    double solid_angle = 0.0;
    Vec3 center;
  };

  struct Neighbor {
    std::uint32_t cell = 0;
    bool mirrored = false;  // adjacent across the equator (through the antipode)
  };

  struct Location {
    std::uint32_t cell = 0;
    // Offset from the cell center: flat-chart (x, y) for the polar cap,
    // (colatitude, longitude) differences otherwise.
    double u = 0.0;
    double v = 0.0;
  };

  struct Stencil {
    std::array<std::uint32_t, 4> cells{};
    std::array<double, 4> weights{};
    int size = 0;
  };

  /// Cells of roughly angle_bin x angle_bin solid angle.
  explicit HemisphereGrid(double angle_bin = M_PI / 18.0);

  std::size_t cell_count() const { return cells_.size(); }
  int ring_count() const { return static_cast<int>(ring_sizes_.size()); }
  int ring_size(int ring) const { return ring_sizes_[static_cast<std::size_t>(ring)]; }
  double band_width() const { return band_; }
  const Cell& cell(std::uint32_t id) const { return cells_[id]; }
  std::span<const Neighbor> neighbors(std::uint32_t id) const;
  /// Largest angle between a cell center and any point of that cell.
  double cell_angular_radius(std::uint32_t id) const;

  /// Containing cell; v and -v give the same answer.
  Location lookup(const Vec3& direction) const;

  /// Interpolation cells and weights (sum 1) for a unit direction.
  Stencil stencil(const Vec3& direction) const;

  /// Mass-weighted mean direction of `center` and its neighbors, computed in
  /// the chart that reproduces a single interpolated vote exactly.
  /// neighbor_mass[i] belongs to neighbors(center)[i].
  Vec3 average_direction(std::uint32_t center, double center_mass,
                         std::span<const double> neighbor_mass) const;

 private:
  std::uint32_t ring_start(int ring) const { return ring_start_[static_cast<std::size_t>(ring)]; }
  // Two cells of `ring` bracketing `longitude` and the share of the second.
  void bracket(int ring, double longitude, std::uint32_t& first, std::uint32_t& second,
               double& fraction) const;
  Vec3 flat_chart_average(std::uint32_t center, double center_mass,
                          std::span<const double> neighbor_mass) const;

  double band_;
  std::vector<int> ring_sizes_;
  std::vector<std::uint32_t> ring_start_;
  std::vector<Cell> cells_;
  std::vector<std::uint32_t> neighbor_start_;
  std::vector<Neighbor> neighbor_list_;
};

struct ConePeak {
  double s_r = 0.0;
  Vec3 axis;
  double mass = 0.0;         // of the maximal bin
  double window_mass = 0.0;  // of the bins around it
};

/// s_r x hemisphere votes for cone axes.
class ConeAccumulator {
 public:
  ConeAccumulator(double s_bin_width, std::size_t s_bins, double angle_bin);

  void reset();
  /// Trilinear spreading over <= 8 cells.
  bool spread(double s_r, const Vec3& axis, double weight);
  bool add_nearest(double s_r, const Vec3& axis, double weight);
  std::optional<ConePeak> extract_max(const ExtractOptions& options) const;

  const GridAccumulator1D& s_axis() const { return s_axis_; }
  const HemisphereGrid& grid() const { return grid_; }
  double at(std::size_t s_bin, std::uint32_t cell) const { return bins_[s_bin * grid_.cell_count() + cell]; }
  double total_mass() const;
  std::size_t dropped() const { return dropped_; }

 private:
  void bump(std::size_t s_bin, std::uint32_t cell, double w);

  GridAccumulator1D s_axis_;  // geometry only
  HemisphereGrid grid_;
  std::vector<double> bins_;
  std::size_t dropped_ = 0;
  std::size_t argmax_ = 0;
  double max_ = 0.0;
};

}  // namespace primvote
