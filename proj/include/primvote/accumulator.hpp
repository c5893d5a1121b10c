#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace primvote {

/// How a peak is turned into parameters.
struct ExtractOptions {
  double min_mass = 8.0;   // the maximal bin must hold strictly more
  bool bin_averaging = true;
  int neighborhood = 1;    // ring size along linear axes
};

/// Plane votes: the local plane voting space is a single point.
class ScalarAccumulator {
 public:
  void reset() { total_ = 0.0; }
  void add(double weight) { total_ += weight; }
  double total() const { return total_; }
  /// The accumulated mass, or nullopt when it does not exceed min_mass.
  std::optional<double> extract_max(const ExtractOptions& options) const;

 private:
  double total_ = 0.0;
};

/// Linear split of a coordinate between the two bin centers that bracket it.
/// Values beyond the outer centers go entirely to the edge bin.
struct LinearSplit {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double upper_fraction = 0.0;  // share of the mass going to `upper`
};

struct Peak1D {
  double value = 0.0;
  double mass = 0.0;         // of the maximal bin
  double window_mass = 0.0;  // of the bins around it
};

/// Radius or s_r votes over (0, bin_count * bin_width].
class GridAccumulator1D {
 public:
  GridAccumulator1D(double bin_width, std::size_t bin_count);

  void reset();
  /// Linear-interpolation spreading. Returns false (and counts the drop) when
  /// the value is outside (0, range()].
  bool spread(double value, double weight);
  /// Nearest-bin voting without interpolation.
  bool add_nearest(double value, double weight);

  std::optional<Peak1D> extract_max(const ExtractOptions& options) const;

  double bin_width() const { return bin_width_; }
  std::size_t bin_count() const { return bins_.size(); }
  double range() const { return bin_width_ * static_cast<double>(bins_.size()); }
  double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width_; }
  std::span<const double> bins() const { return bins_; }
  double total_mass() const;
  std::size_t dropped() const { return dropped_; }

  bool in_range(double value) const { return value > 0.0 && value <= range(); }
  LinearSplit split(double value) const;
  std::size_t nearest(double value) const;

 private:
  void bump(std::size_t i, double w);

  double bin_width_;
  std::vector<double> bins_;
  std::size_t dropped_ = 0;
  std::size_t argmax_ = 0;
  double max_ = 0.0;
};

struct Peak2D {
  double radius = 0.0;
  double angle = 0.0;  // [0, pi)
  double mass = 0.0;         // of the maximal bin
  double window_mass = 0.0;  // of the bins around it
};

/// Cylinder votes: radius x cyclic angle in [0, pi).
class GridAccumulator2D {
 public:
  GridAccumulator2D(double radius_bin_width, std::size_t radius_bins, double angle_bin);

  void reset();
  bool spread(double radius, double angle, double weight);
  bool add_nearest(double radius, double angle, double weight);
  std::optional<Peak2D> extract_max(const ExtractOptions& options) const;

  const GridAccumulator1D& radius_axis() const { return radius_axis_; }
  std::size_t angle_bins() const { return angle_bins_; }
  double angle_width() const { return angle_width_; }
  double angle_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * angle_width_; }
  double at(std::size_t radius_bin, std::size_t angle_bin) const {
    return bins_[radius_bin * angle_bins_ + angle_bin];
  }
  double total_mass() const;
  std::size_t dropped() const { return dropped_; }

 private:
  void bump(std::size_t i, std::size_t j, double w);

  GridAccumulator1D radius_axis_;  // geometry only; its bins stay empty
  std::size_t angle_bins_;
  double angle_width_;
  std::vector<double> bins_;
  std::size_t dropped_ = 0;
  std::size_t argmax_ = 0;
  double max_ = 0.0;
};

}  // namespace primvote
