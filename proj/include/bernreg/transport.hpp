#pragma once

// One-dimensional optimal transport on grid-represented distribution
// functions: quantile curves, Frechet-Wasserstein means, warp maps,
// registration of observed patterns, and posterior summaries over MCMC draws.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bernreg/dp_gibbs.hpp"
#include "bernreg/monotone_map.hpp"
#include "bernreg/point_pattern.hpp"

namespace bernreg {

/// Generalized inverse sampled on the same grid: value at level p is
/// inf{t : cdf(t) >= p}, taking the left end of flat segments.
MonotoneMap quantile_curve(const MonotoneMap& cdf);

/// Inverse of the average quantile function. Requires n >= 1 maps on one grid.
MonotoneMap frechet_mean(std::span<const MonotoneMap> cdfs);

/// Optimal transport map of `mean` onto `process`: T(t) = Q(F(t)) with Q the
/// grid quantile curve of `process`.
MonotoneMap warp_map(const MonotoneMap& process, const MonotoneMap& mean);

/// Same as warp_map but takes the precomputed quantile curve of the process.
MonotoneMap warp_from_quantile(const MonotoneMap& process_quantile, const MonotoneMap& mean);

/// Pulls every observed location back through the warp: x -> T^{-1}(x).
PointPattern register_pattern(const PointPattern& observed, const MonotoneMap& warp);

/// L2-Wasserstein distance between the normalized empirical measures of two
/// nonempty patterns, computed exactly from their step quantile functions.
double wasserstein(const PointPattern& a, const PointPattern& b);

/// Pointwise posterior mean with a symmetric quantile band.
struct CurveBand {
  MonotoneMap mean;
  MonotoneMap lower;
  MonotoneMap upper;
};

struct PointInterval {
  double observed = 0.0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct RegistrationResult {
  std::size_t draws = 0;
  double band_level = 0.95;
  CurveBand frechet_mean;
  std::vector<CurveBand> warps;
  std::vector<PointPattern> registered;               // posterior-mean locations
  std::vector<std::vector<PointInterval>> intervals;  // per process, per observed point

  std::size_t grid_intervals() const { return frechet_mean.mean.intervals(); }
};

struct SummaryOptions {
  std::size_t grid_intervals = 512;
  double band_level = 0.95;
  unsigned threads = 1;
  /// Called once per (process, draw) with that draw's warp, in draw order
  /// for each process. Used for per-draw functionals such as peak scores.
  std::function<void(std::size_t process, std::size_t draw, const MonotoneMap& warp)>
      on_warp_draw;
};

/// For each draw j: distribution functions F_{i,j} from the Bernstein draws,
/// their Frechet mean F_j, warps T_{i,j} = F_{i,j}^{-1} o F_j and registered
/// points T_{i,j}^{-1}(x). Returns posterior means and pointwise bands.
/// Throws InputError for empty input and ConsistencyError when chains differ
/// in draw count or the observed list does not match the chains.
RegistrationResult posterior_summaries(std::span<const PosteriorChain> chains,
                                       std::span<const PointPattern> observed,
                                       const SummaryOptions& options);

/// Type-7 empirical quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

}  // namespace bernreg
