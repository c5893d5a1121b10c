#include "primvote/accumulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace primvote {

std::optional<double> ScalarAccumulator::extract_max(const ExtractOptions& options) const {
  if (!(total_ > options.min_mass)) return std::nullopt;
  return total_;
}

GridAccumulator1D::GridAccumulator1D(double bin_width, std::size_t bin_count)
    : bin_width_(bin_width), bins_(bin_count, 0.0) {
  if (!(bin_width > 0.0) || bin_count == 0)
    throw std::invalid_argument("1D accumulator needs a positive bin width and count");
}

void GridAccumulator1D::reset() {
  std::fill(bins_.begin(), bins_.end(), 0.0);
  dropped_ = 0;
  argmax_ = 0;
  max_ = 0.0;
}

LinearSplit GridAccumulator1D::split(double value) const {
  const double u = value / bin_width_ - 0.5;
  const double lower = std::floor(u);
  const std::size_t last = bins_.size() - 1;
  if (lower < 0.0) return {0, 0, 0.0};
  if (lower >= static_cast<double>(last)) return {last, last, 0.0};
  const auto i = static_cast<std::size_t>(lower);
  return {i, i + 1, u - lower};
}

std::size_t GridAccumulator1D::nearest(double value) const {
  const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(value / bin_width_)));
  return std::min(i, bins_.size() - 1);
}

void GridAccumulator1D::bump(std::size_t i, double w) {
  bins_[i] += w;
  if (bins_[i] > max_) {
    max_ = bins_[i];
    argmax_ = i;
  }
}

bool GridAccumulator1D::spread(double value, double weight) {
  if (!in_range(value)) {
    ++dropped_;
    return false;
  }
  const LinearSplit s = split(value);
  bump(s.lower, weight * (1.0 - s.upper_fraction));
  if (s.upper != s.lower) bump(s.upper, weight * s.upper_fraction);
  return true;
}

bool GridAccumulator1D::add_nearest(double value, double weight) {
  if (!in_range(value)) {
    ++dropped_;
    return false;
  }
  bump(nearest(value), weight);
  return true;
}

double GridAccumulator1D::total_mass() const {
  double sum = 0.0;
  for (double b : bins_) sum += b;
  return sum;
}

std::optional<Peak1D> GridAccumulator1D::extract_max(const ExtractOptions& options) const {
  if (!(max_ > options.min_mass)) return std::nullopt;
  const auto m = static_cast<std::ptrdiff_t>(argmax_);
  const auto last = static_cast<std::ptrdiff_t>(bins_.size()) - 1;
  double mass = 0.0;
  double moment = 0.0;
  for (auto i = std::max<std::ptrdiff_t>(0, m - options.neighborhood);
       i <= std::min(last, m + options.neighborhood); ++i) {
    mass += bins_[i];
    moment += bins_[i] * center(i);
  }
  return Peak1D{options.bin_averaging ? moment / mass : center(argmax_), max_, mass};
}

GridAccumulator2D::GridAccumulator2D(double radius_bin_width, std::size_t radius_bins, double angle_bin)
    : radius_axis_(radius_bin_width, radius_bins) {
  if (!(angle_bin > 0.0 && angle_bin <= M_PI))
    throw std::invalid_argument("2D accumulator needs an angle bin in (0, pi]");
  angle_bins_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(M_PI / angle_bin)));
  angle_width_ = M_PI / static_cast<double>(angle_bins_);
  bins_.assign(radius_bins * angle_bins_, 0.0);
}

void GridAccumulator2D::reset() {
  std::fill(bins_.begin(), bins_.end(), 0.0);
  dropped_ = 0;
  argmax_ = 0;
  max_ = 0.0;
}

void GridAccumulator2D::bump(std::size_t i, std::size_t j, double w) {
  const std::size_t k = i * angle_bins_ + j;
  bins_[k] += w;
  if (bins_[k] > max_) {
    max_ = bins_[k];
    argmax_ = k;
  }
}

bool GridAccumulator2D::spread(double radius, double angle, double weight) {
  if (!radius_axis_.in_range(radius)) {
    ++dropped_;
    return false;
  }
  const LinearSplit r = radius_axis_.split(radius);
  const double u = angle / angle_width_ - 0.5;
  const double lower = std::floor(u);
  const double fa = u - lower;
  const auto n = static_cast<std::ptrdiff_t>(angle_bins_);
  const auto j0 = static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(lower) % n) + n) % n);
  const std::size_t j1 = (j0 + 1) % angle_bins_;
  const double wr0 = weight * (1.0 - r.upper_fraction);
  const double wr1 = weight * r.upper_fraction;
  bump(r.lower, j0, wr0 * (1.0 - fa));
  bump(r.lower, j1, wr0 * fa);
  if (r.upper != r.lower) {
    bump(r.upper, j0, wr1 * (1.0 - fa));
    bump(r.upper, j1, wr1 * fa);
  }
  return true;
}

bool GridAccumulator2D::add_nearest(double radius, double angle, double weight) {
  if (!radius_axis_.in_range(radius)) {
    ++dropped_;
    return false;
  }
  auto j = static_cast<std::size_t>(std::max(0.0, std::floor(angle / angle_width_)));
  bump(radius_axis_.nearest(radius), std::min(j, angle_bins_ - 1), weight);
  return true;
}

double GridAccumulator2D::total_mass() const {
  double sum = 0.0;
  for (double b : bins_) sum += b;
  return sum;
}

std::optional<Peak2D> GridAccumulator2D::extract_max(const ExtractOptions& options) const {
  if (!(max_ > options.min_mass)) return std::nullopt;
  const auto mi = static_cast<std::ptrdiff_t>(argmax_ / angle_bins_);
  const auto mj = static_cast<std::ptrdiff_t>(argmax_ % angle_bins_);
  const auto last = static_cast<std::ptrdiff_t>(radius_axis_.bin_count()) - 1;
  const auto n = static_cast<std::ptrdiff_t>(angle_bins_);
  // An angular window wider than the circle would count bins twice.
  const std::ptrdiff_t reach = std::min<std::ptrdiff_t>(options.neighborhood, (n - 1) / 2);
  double mass = 0.0, radius_moment = 0.0, angle_moment = 0.0;
  for (auto i = std::max<std::ptrdiff_t>(0, mi - options.neighborhood);
       i <= std::min(last, mi + options.neighborhood); ++i) {
    for (std::ptrdiff_t dj = -reach; dj <= reach; ++dj) {
      const auto j = static_cast<std::size_t>(((mj + dj) % n + n) % n);
      const double w = at(static_cast<std::size_t>(i), j);
      mass += w;
      radius_moment += w * radius_axis_.center(static_cast<std::size_t>(i));
      angle_moment += w * (angle_center(static_cast<std::size_t>(mj)) + static_cast<double>(dj) * angle_width_);
    }
  }
  if (!options.bin_averaging)
    return Peak2D{radius_axis_.center(static_cast<std::size_t>(mi)), angle_center(static_cast<std::size_t>(mj)), max_,
                  mass};
  double angle = std::fmod(angle_moment / mass, M_PI);
  if (angle < 0.0) angle += M_PI;
  return Peak2D{radius_moment / mass, angle, max_, mass};
}

}  // namespace primvote
