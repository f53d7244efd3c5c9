#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bernreg {

/// One realization of a point process on [0,1]: a sorted multiset of locations.
class PointPattern {
 public:
  PointPattern() = default;
  /// Sorts the locations; throws InputError if any lies outside [0,1] or is NaN.
  explicit PointPattern(std::vector<double> points);

  std::size_t count() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }

  friend bool operator==(const PointPattern&, const PointPattern&) = default;

 private:
  std::vector<double> points_;
};

}  // namespace bernreg
