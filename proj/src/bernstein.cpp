#include "bernreg/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bernreg/errors.hpp"

namespace bernreg {

namespace {

void check_unit(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InputError(std::string(what) + " argument " + std::to_string(t) + " outside [0,1]");
  }
}

// Dot product of a binomial(k, t) row against cumulative weights W_j = w_1 + .. + w_j.
double cdf_from_row(std::span<const double> pmf, std::span<const double> weights) {
  double cumulative = 0.0;
  double total = 0.0;
  for (std::size_t j = 1; j < pmf.size(); ++j) {
    cumulative += weights[j - 1];
    total += pmf[j] * cumulative;
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace

namespace detail {

void binomial_pmf_row(int n, double t, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (t <= 0.0) {
    out.front() = 1.0;
    return;
  }
  if (t >= 1.0) {
    out.back() = 1.0;
    return;
  }
  const int mode = std::clamp(static_cast<int>(std::floor((n + 1) * t)), 0, n);
  const double log_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) -
                          std::lgamma(n - mode + 1.0) + mode * std::log(t) +
                          (n - mode) * std::log1p(-t);
  const double odds = t / (1.0 - t);
  out[mode] = std::exp(log_mode);
  for (int j = mode; j < n; ++j) {
    out[j + 1] = out[j] * (static_cast<double>(n - j) / (j + 1)) * odds;
  }
  for (int j = mode; j > 0; --j) {
    out[j - 1] = out[j] * (static_cast<double>(j) / (n - j + 1)) / odds;
  }
}

}  // namespace detail

BernsteinMixture::BernsteinMixture(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw InputError("Bernstein mixture needs at least one weight");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) {
      throw InputError("Bernstein weight " + std::to_string(w) + " is negative or NaN");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InputError("Bernstein weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

BernsteinMixture BernsteinMixture::uniform(int k) {
  if (k < 1) throw InputError("Bernstein degree must be >= 1");
  return BernsteinMixture(std::vector<double>(static_cast<std::size_t>(k), 1.0 / k));
}

double bernstein_cdf(double t, const BernsteinMixture& mix) {
  check_unit(t, "bernstein_cdf");
  if (t == 0.0) return 0.0;
  if (t == 1.0) return 1.0;
  std::vector<double> pmf;
  detail::binomial_pmf_row(mix.degree(), t, pmf);
  return cdf_from_row(pmf, mix.weights());
}

double bernstein_pdf(double t, const BernsteinMixture& mix) {
  check_unit(t, "bernstein_pdf");
  // Beta(t | i, k - i + 1) = k * P(Binomial(k - 1, t) = i - 1).
  const int k = mix.degree();
  std::vector<double> pmf;
  detail::binomial_pmf_row(k - 1, t, pmf);
  const auto w = mix.weights();
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += w[i] * pmf[i];
  return k * total;
}

std::vector<double> bernstein_cdf_grid(const BernsteinMixture& mix, std::size_t intervals) {
  if (intervals == 0) throw InputError("grid needs at least one interval");
  std::vector<double> values(intervals + 1);
  std::vector<double> pmf;
  values.front() = 0.0;
  values.back() = 1.0;
  for (std::size_t g = 1; g < intervals; ++g) {
    detail::binomial_pmf_row(mix.degree(), static_cast<double>(g) / intervals, pmf);
    values[g] = cdf_from_row(pmf, mix.weights());
  }
  // Summation noise can break monotonicity by a few ulps where the CDF is flat.
  for (std::size_t g = 1; g <= intervals; ++g) values[g] = std::max(values[g], values[g - 1]);
  return values;
}

double bernstein_quantile(double p, const BernsteinMixture& mix, double tol) {
  check_unit(p, "bernstein_quantile");
  if (!(tol > 0.0)) throw InputError("quantile tolerance must be positive");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  double lo = 0.0;
  double hi = 1.0;
  double best_t = 0.5;
  double best_err = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double value = bernstein_cdf(mid, mix);
    const double err = std::abs(value - p);
    if (err < best_err) {
      best_err = err;
      best_t = mid;
    }
    if (err <= tol) return mid;
    if (value < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) break;
  }
  if (best_err <= tol) return best_t;
  throw NumericError("bernstein_quantile did not converge for p=" + std::to_string(p) +
                     " (residual " + std::to_string(best_err) + ")");
}

BernsteinMixture weights_from_cdf(const std::function<double(double)>& cdf, int k) {
  if (k < 1) throw InputError("Bernstein degree must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(k));
  double previous = cdf(0.0);
  for (int i = 1; i <= k; ++i) {
    const double current = cdf(static_cast<double>(i) / k);
    const double increment = current - previous;
    if (increment < -1e-12) {
      throw NumericError("distribution function decreases on [" + std::to_string((i - 1.0) / k) +
                         ", " + std::to_string(static_cast<double>(i) / k) + "]");
    }
    w[i - 1] = std::max(increment, 0.0);
    previous = current;
  }
  return BernsteinMixture(std::move(w));
}

}  // namespace bernreg
