#pragma once

// Random Bernstein polynomial distributions on [0,1].
//
// A mixture of degree k with weights w_1..w_k has density
//   b(t) = sum_i w_i * Beta(t | i, k - i + 1)
// and distribution function
//   B(t) = sum_i w_i * P(Beta(i, k - i + 1) <= t) = sum_i w_i * P(Binomial(k, t) >= i).
// Both are evaluated through a single row of binomial probabilities, so no
// incomplete-beta routine is needed for integer parameters.

#include <functional>
#include <span>
#include <vector>

namespace bernreg {

class BernsteinMixture {
 public:
  /// Takes ownership of the weights. Throws InputError unless every weight is
  /// nonnegative and the weights sum to one within 1e-12.
  explicit BernsteinMixture(std::vector<double> weights);

  /// Equal weights 1/k, which reproduce the Uniform(0,1) law exactly.
  static BernsteinMixture uniform(int k);

  int degree() const noexcept { return static_cast<int>(weights_.size()); }
  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const BernsteinMixture&, const BernsteinMixture&) = default;

 private:
  std::vector<double> weights_;
};

double bernstein_cdf(double t, const BernsteinMixture& mix);
double bernstein_pdf(double t, const BernsteinMixture& mix);

/// Distribution function on the equispaced grid {i / intervals}, i = 0..intervals.
/// Endpoints are pinned to exactly 0 and 1.
std::vector<double> bernstein_cdf_grid(const BernsteinMixture& mix, std::size_t intervals);

inline constexpr double kDefaultQuantileTol = 1e-10;

/// Bisection inverse of bernstein_cdf. Returns t with |B(t) - p| <= tol; p = 0
/// maps to 0 and p = 1 to 1. Throws NumericError if the bracket collapses
/// before the tolerance is met (at most 200 halvings).
double bernstein_quantile(double p, const BernsteinMixture& mix, double tol = kDefaultQuantileTol);

/// Weights w_i = G(i/k) - G((i-1)/k) for a distribution function G on [0,1].
/// Increments below -1e-12 mean G is not monotone and raise NumericError.
BernsteinMixture weights_from_cdf(const std::function<double(double)>& cdf, int k);

namespace detail {

/// P(Binomial(n, t) = j) for j = 0..n, written into `out` (resized to n + 1).
/// Evaluated outward from the mode so that no term underflows prematurely.
void binomial_pmf_row(int n, double t, std::vector<double>& out);

}  // namespace detail

}  // namespace bernreg
