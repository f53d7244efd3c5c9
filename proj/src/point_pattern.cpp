#include "bernreg/point_pattern.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bernreg/errors.hpp"

namespace bernreg {

PointPattern::PointPattern(std::vector<double> points) : points_(std::move(points)) {
  for (double x : points_) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw InputError("point location " + std::to_string(x) + " lies outside [0,1]");
    }
  }
  std::sort(points_.begin(), points_.end());
}

}  // namespace bernreg
