#include "bernreg/monotone_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bernreg/errors.hpp"

namespace bernreg {

namespace {
constexpr double kMonotoneTol = 1e-12;
}

MonotoneMap::MonotoneMap(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw InputError("monotone map needs at least two knots");
  if (std::abs(values_.front()) > kMonotoneTol) {
    throw InputError("monotone map must start at 0");
  }
  values_.front() = 0.0;
  if (values_.back() > 1.0 + kMonotoneTol) throw InputError("monotone map exceeds 1");
  if (std::abs(values_.back() - 1.0) <= kMonotoneTol) values_.back() = 1.0;
  for (std::size_t g = 1; g < values_.size(); ++g) {
    const double v = values_[g];
    if (std::isnan(v) || v < values_[g - 1] - kMonotoneTol) {
      throw InputError("monotone map decreases at knot " + std::to_string(g));
    }
    values_[g] = std::clamp(v, values_[g - 1], 1.0);
  }
}

MonotoneMap MonotoneMap::identity(std::size_t intervals) {
  return sample([](double t) { return t; }, intervals);
}

MonotoneMap MonotoneMap::sample(const std::function<double(double)>& f, std::size_t intervals) {
  if (intervals == 0) throw InputError("grid needs at least one interval");
  std::vector<double> v(intervals + 1);
  for (std::size_t g = 0; g <= intervals; ++g) {
    v[g] = f(static_cast<double>(g) / static_cast<double>(intervals));
  }
  return MonotoneMap(std::move(v));
}

double MonotoneMap::operator()(double t) const {
  const double n = static_cast<double>(intervals());
  const double x = std::clamp(t, 0.0, 1.0) * n;
  const auto g = std::min(static_cast<std::size_t>(x), intervals() - 1);
  const double frac = x - static_cast<double>(g);
  return values_[g] + frac * (values_[g + 1] - values_[g]);
}

double MonotoneMap::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  y = std::min(y, 1.0);
  const auto it = std::lower_bound(values_.begin(), values_.end(), y);
  if (it == values_.end()) return 1.0;
  const auto j = static_cast<std::size_t>(it - values_.begin());
  // values_[j-1] < y <= values_[j], so the segment is strictly increasing.
  const double lo = values_[j - 1];
  const double frac = (y - lo) / (values_[j] - lo);
  return std::min((static_cast<double>(j - 1) + frac) / static_cast<double>(intervals()), 1.0);
}

double sup_distance(const MonotoneMap& a, const MonotoneMap& b) {
  if (a.intervals() != b.intervals()) throw ConsistencyError("maps live on different grids");
  double worst = 0.0;
  for (std::size_t g = 0; g <= a.intervals(); ++g) worst = std::max(worst, std::abs(a[g] - b[g]));
  return worst;
}

}  // namespace bernreg
