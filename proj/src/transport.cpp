#include "bernreg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bernreg/errors.hpp"
#include "bernreg/parallel.hpp"

namespace bernreg {

namespace {

void require_pinned(const MonotoneMap& map, const char* what) {
  if (!map.pinned()) throw InputError(std::string(what) + " must be pinned at 0 and 1");
}

MonotoneMap pinned_copy(std::vector<double> values) {
  values.back() = 1.0;
  return MonotoneMap(std::move(values));
}

MonotoneMap mean_quantile(std::span<const MonotoneMap> quantiles) {
  const std::size_t g_count = quantiles.front().intervals() + 1;
  std::vector<double> avg(g_count, 0.0);
  for (const auto& q : quantiles) {
    if (q.intervals() + 1 != g_count) throw ConsistencyError("maps live on different grids");
    for (std::size_t g = 0; g < g_count; ++g) avg[g] += q[g];
  }
  const double n = static_cast<double>(quantiles.size());
  for (double& v : avg) v /= n;
  return MonotoneMap(std::move(avg));
}

// Fills lower/mean/upper curves from per-draw samples laid out [draw][knot].
CurveBand band_from_draws(const std::vector<std::vector<double>>& draws, double level,
                          bool pin) {
  const std::size_t g_count = draws.front().size();
  const std::size_t m = draws.size();
  std::vector<double> mean(g_count), lower(g_count), upper(g_count), column(m);
  const double p_lo = 0.5 * (1.0 - level);
  const double p_hi = 0.5 * (1.0 + level);
  for (std::size_t g = 0; g < g_count; ++g) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      column[j] = draws[j][g];
      sum += column[j];
    }
    mean[g] = sum / static_cast<double>(m);
    std::sort(column.begin(), column.end());
    lower[g] = sorted_quantile(column, p_lo);
    upper[g] = sorted_quantile(column, p_hi);
  }
  if (pin) {
    return {pinned_copy(std::move(mean)), pinned_copy(std::move(lower)),
            pinned_copy(std::move(upper))};
  }
  return {MonotoneMap(std::move(mean)), MonotoneMap(std::move(lower)),
          MonotoneMap(std::move(upper))};
}

}  // namespace

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MonotoneMap quantile_curve(const MonotoneMap& cdf) {
  const std::size_t n = cdf.intervals();
  std::vector<double> q(n + 1);
  for (std::size_t g = 0; g <= n; ++g) q[g] = cdf.inverse(static_cast<double>(g) / n);
  return MonotoneMap(std::move(q));
}

MonotoneMap frechet_mean(std::span<const MonotoneMap> cdfs) {
  if (cdfs.empty()) throw InputError("Frechet mean of an empty list");
  std::vector<MonotoneMap> quantiles;
  quantiles.reserve(cdfs.size());
  for (const auto& f : cdfs) {
    require_pinned(f, "distribution function");
    quantiles.push_back(quantile_curve(f));
  }
  const MonotoneMap inverse = quantile_curve(mean_quantile(quantiles));
  return pinned_copy({inverse.values().begin(), inverse.values().end()});
}

MonotoneMap warp_from_quantile(const MonotoneMap& process_quantile, const MonotoneMap& mean) {
  require_pinned(mean, "mean distribution function");
  if (process_quantile.intervals() != mean.intervals()) {
    throw ConsistencyError("maps live on different grids");
  }
  std::vector<double> t(mean.intervals() + 1);
  for (std::size_t g = 0; g < t.size(); ++g) t[g] = process_quantile(mean[g]);
  // The transport map is only determined on the support of the mean; past it
  // the warp is extended to reach 1.
  return pinned_copy(std::move(t));
}

MonotoneMap warp_map(const MonotoneMap& process, const MonotoneMap& mean) {
  require_pinned(process, "process distribution function");
  return warp_from_quantile(quantile_curve(process), mean);
}

PointPattern register_pattern(const PointPattern& observed, const MonotoneMap& warp) {
  std::vector<double> out;
  out.reserve(observed.count());
  for (double x : observed.points()) out.push_back(warp.inverse(x));
  return PointPattern(std::move(out));
}

double wasserstein(const PointPattern& a, const PointPattern& b) {
  if (a.empty() || b.empty()) throw InputError("Wasserstein distance needs nonempty patterns");
  const std::uint64_t m = a.count();
  const std::uint64_t n = b.count();
  const double scale = static_cast<double>(m) * static_cast<double>(n);
  // Quantile levels i/m and j/n compared exactly as integers i*n and j*m.
  std::uint64_t i = 0, j = 0, prev = 0;
  double total = 0.0;
  while (i < m && j < n) {
    const std::uint64_t next_a = (i + 1) * n;
    const std::uint64_t next_b = (j + 1) * m;
    const std::uint64_t next = std::min(next_a, next_b);
    const double diff = a[i] - b[j];
    total += static_cast<double>(next - prev) / scale * diff * diff;
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return std::sqrt(total);
}

RegistrationResult posterior_summaries(std::span<const PosteriorChain> chains,
                                       std::span<const PointPattern> observed,
                                       const SummaryOptions& options) {
  if (chains.empty()) throw InputError("posterior summaries need at least one chain");
  if (observed.size() != chains.size()) {
    throw ConsistencyError("got " + std::to_string(chains.size()) + " chains but " +
                           std::to_string(observed.size()) + " observed patterns");
  }
  const std::size_t draws = chains.front().size();
  if (draws == 0) throw InputError("chain 0 has no draws");
  for (std::size_t i = 1; i < chains.size(); ++i) {
    if (chains[i].size() != draws) {
      throw ConsistencyError("chain " + std::to_string(i) + " has " +
                             std::to_string(chains[i].size()) + " draws, chain 0 has " +
                             std::to_string(draws));
    }
  }
  if (!(options.band_level > 0.0 && options.band_level < 1.0)) {
    throw InputError("band level must lie in (0,1)");
  }
  if (options.grid_intervals < 1) throw InputError("grid needs at least one interval");

  const std::size_t n = chains.size();
  const std::size_t grid = options.grid_intervals;
  // Bernstein mixtures are supported on all of [0,1], so the level-1 quantile
  // is 1 even when the tabulated CDF rounds to 1 early in a light upper tail.
  auto process_quantile = [&](std::size_t i, std::size_t j) {
    const MonotoneMap q =
        quantile_curve(MonotoneMap(bernstein_cdf_grid(chains[i].draws[j], grid)));
    return pinned_copy({q.values().begin(), q.values().end()});
  };

  std::vector<std::vector<double>> mean_draws(draws);
  parallel_for(draws, options.threads, [&](std::size_t j) {
    std::vector<MonotoneMap> quantiles;
    quantiles.reserve(n);
    for (std::size_t i = 0; i < n; ++i) quantiles.push_back(process_quantile(i, j));
    const MonotoneMap f = quantile_curve(mean_quantile(quantiles));
    mean_draws[j].assign(f.values().begin(), f.values().end());
    mean_draws[j].back() = 1.0;
  });

  RegistrationResult result;
  result.draws = draws;
  result.band_level = options.band_level;
  result.frechet_mean = band_from_draws(mean_draws, options.band_level, true);

  const double p_lo = 0.5 * (1.0 - options.band_level);
  const double p_hi = 0.5 * (1.0 + options.band_level);
  for (std::size_t i = 0; i < n; ++i) {
    const auto points = observed[i].points();
    std::vector<std::vector<double>> warp_draws(draws);
    std::vector<std::vector<double>> registered_draws(draws);
    parallel_for(draws, options.threads, [&](std::size_t j) {
      const MonotoneMap warp = warp_from_quantile(
          process_quantile(i, j), MonotoneMap(std::vector<double>(mean_draws[j])));
      warp_draws[j].assign(warp.values().begin(), warp.values().end());
      registered_draws[j].resize(points.size());
      for (std::size_t p = 0; p < points.size(); ++p) {
        registered_draws[j][p] = warp.inverse(points[p]);
      }
    });
    if (options.on_warp_draw) {
      for (std::size_t j = 0; j < draws; ++j) {
        options.on_warp_draw(i, j, MonotoneMap(std::vector<double>(warp_draws[j])));
      }
    }
    result.warps.push_back(band_from_draws(warp_draws, options.band_level, true));

    std::vector<double> registered(points.size());
    std::vector<PointInterval> intervals(points.size());
    std::vector<double> column(draws);
    for (std::size_t p = 0; p < points.size(); ++p) {
      double sum = 0.0;
      for (std::size_t j = 0; j < draws; ++j) {
        column[j] = registered_draws[j][p];
        sum += column[j];
      }
      std::sort(column.begin(), column.end());
      registered[p] = std::clamp(sum / static_cast<double>(draws), 0.0, 1.0);
      intervals[p] = {points[p], registered[p], sorted_quantile(column, p_lo),
                      sorted_quantile(column, p_hi)};
    }
    result.registered.emplace_back(std::move(registered));
    result.intervals.push_back(std::move(intervals));
  }
  return result;
}

}  // namespace bernreg
