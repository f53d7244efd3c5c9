#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bernreg {

/// A nondecreasing map [0,1] -> [0,1] sampled on the equispaced grid
/// t_g = g / G, g = 0..G, with values[0] = 0. Between knots the map is the
/// linear interpolant. Distribution functions, quantile curves and warp maps
/// all use this representation; distribution functions and warps are also
/// pinned (values[G] = 1), while the quantile curve of a distribution whose
/// support ends before 1 stops short of 1.
class MonotoneMap {
 public:
  /// Identity on a single interval.
  MonotoneMap() : values_{0.0, 1.0} {}
  /// Validates values[0] = 0, values within [0,1] and monotonicity, each
  /// within 1e-12, then snaps sub-tolerance deviations. Throws InputError.
  explicit MonotoneMap(std::vector<double> values);

  static MonotoneMap identity(std::size_t intervals);
  static MonotoneMap sample(const std::function<double(double)>& f, std::size_t intervals);

  std::size_t intervals() const noexcept { return values_.size() - 1; }
  double knot(std::size_t g) const noexcept {
    return static_cast<double>(g) / static_cast<double>(intervals());
  }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t g) const { return values_[g]; }
  bool pinned() const noexcept { return values_.back() == 1.0; }

  /// Linear interpolation; arguments are clamped to [0,1].
  double operator()(double t) const;

  /// Generalized inverse of the interpolant, inf{t : M(t) >= y}; 1 when the
  /// map never reaches y.
  double inverse(double y) const;

  friend bool operator==(const MonotoneMap&, const MonotoneMap&) = default;

 private:
  std::vector<double> values_;
};

/// Sup-norm distance between two maps on the same grid.
double sup_distance(const MonotoneMap& a, const MonotoneMap& b);

}  // namespace bernreg
