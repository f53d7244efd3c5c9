#include "bernreg/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>

#include "bernreg/errors.hpp"
#include "bernreg/parallel.hpp"
#include "bernreg/transport.hpp"

namespace bernreg {

namespace {

constexpr std::size_t kMonotoneCheckIntervals = 16384;

int poisson_count(double mean, Rng& rng) {
  std::poisson_distribution<int> draw(mean);
  int m = 0;
  // A process needs at least one point to be fitted.
  while ((m = draw(rng)) == 0) {
  }
  return m;
}

double clamp_unit(double x) {
  // Exact warps can overshoot [0,1] by rounding only.
  return std::clamp(x, 0.0, 1.0);
}

void sample_processes(ScenarioDataset& ds, const GridDensitySampler& sampler, double mean_count,
                      Rng& rng) {
  for (std::size_t i = 0; i < ds.warp_functions.size(); ++i) {
    const int m = poisson_count(mean_count, rng);
    std::vector<double> x(static_cast<std::size_t>(m));
    for (double& v : x) v = sampler(rng);
    std::vector<double> warped(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) warped[j] = clamp_unit(ds.warp_functions[i](x[j]));
    ds.originals.emplace_back(std::move(x));
    ds.warped.emplace_back(std::move(warped));
  }
}

}  // namespace

std::string to_string(Scenario scenario) {
  return scenario == Scenario::kSmallN ? "small_n" : "large_n";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "small_n") return Scenario::kSmallN;
  if (name == "large_n") return Scenario::kLargeN;
  throw InputError("unknown scenario '" + name + "' (expected small_n or large_n)");
}

GridDensitySampler::GridDensitySampler(const std::function<double(double)>& density,
                                       std::size_t intervals)
    : cdf_(intervals + 1, 0.0) {
  const double h = 1.0 / static_cast<double>(intervals);
  double previous = density(0.0);
  for (std::size_t g = 1; g <= intervals; ++g) {
    const double current = density(static_cast<double>(g) * h);
    cdf_[g] = cdf_[g - 1] + 0.5 * h * (previous + current);
    previous = current;
  }
  mass_ = cdf_.back();
  if (!(mass_ > 0.0)) throw InputError("density has no mass on [0,1]");
  for (double& c : cdf_) c /= mass_;
  cdf_.back() = 1.0;
}

double GridDensitySampler::operator()(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto g = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin(), 1,
                                                                      static_cast<std::ptrdiff_t>(cdf_.size() - 1)));
  const double lo = cdf_[g - 1];
  const double hi = cdf_[g];
  const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
  return (static_cast<double>(g - 1) + frac) / static_cast<double>(cdf_.size() - 1);
}

double GridDensitySampler::cdf(double t) const {
  const double n = static_cast<double>(cdf_.size() - 1);
  const double x = std::clamp(t, 0.0, 1.0) * n;
  const auto g = std::min(static_cast<std::size_t>(x), cdf_.size() - 2);
  return cdf_[g] + (x - static_cast<double>(g)) * (cdf_[g + 1] - cdf_[g]);
}

double normal_pdf(double t, double mean, double sd) {
  const double z = (t - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double beta_pdf(double t, double a, double b) {
  if (t < 0.0 || t > 1.0) return 0.0;
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double left = a == 1.0 ? 0.0 : (a - 1.0) * std::log(t);
  const double right = b == 1.0 ? 0.0 : (b - 1.0) * std::log1p(-t);
  return std::exp(log_norm + left + right);
}

double beta_cdf(double t, double a, double b) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, t);
}

double small_n_density(double t) {
  return 0.45 * (normal_pdf(t, 0.25, 0.02) + normal_pdf(t, 0.75, 0.03)) +
         0.1 * beta_pdf(t, 1.5, 1.5);
}

double large_n_density(double t) {
  return 0.2 * normal_pdf(t, 0.25, 0.02) + 0.8 * normal_pdf(t, 0.75, 0.03);
}

double zeta_warp(double t, int k) {
  if (k == 0) return t;
  const double kk = static_cast<double>(k);
  return t - std::sin(std::numbers::pi * t * kk) / (std::abs(kk) * std::numbers::pi);
}

ScenarioDataset gen_small_n(std::uint64_t seed, std::size_t grid_intervals) {
  ScenarioDataset ds;
  ds.scenario = Scenario::kSmallN;
  ds.seed = seed;
  Rng rng(seed);
  std::uniform_real_distribution<double> shape(1.0, 3.0);

  double a1, b1, a2, b2;
  for (;;) {
    a1 = shape(rng);
    b1 = shape(rng);
    a2 = shape(rng);
    b2 = shape(rng);
    bool monotone = true;
    double previous = 0.0;
    for (std::size_t g = 1; g <= kMonotoneCheckIntervals && monotone; ++g) {
      const double t = static_cast<double>(g) / kMonotoneCheckIntervals;
      const double v = 3.0 * t - beta_cdf(t, a1, b1) - beta_cdf(t, a2, b2);
      monotone = v >= previous;
      previous = v;
    }
    if (monotone) break;
    ++ds.warp_redraws;
  }
  ds.warp_functions = {
      [=](double t) { return beta_cdf(t, a1, b1); },
      [=](double t) { return beta_cdf(t, a2, b2); },
      [=](double t) { return 3.0 * t - beta_cdf(t, a1, b1) - beta_cdf(t, a2, b2); },
  };
  for (const auto& f : ds.warp_functions) {
    ds.true_warps.push_back(MonotoneMap::sample([&](double t) { return clamp_unit(f(t)); },
                                                grid_intervals));
  }

  const GridDensitySampler sampler(small_n_density);
  ds.density_mass = sampler.mass();
  sample_processes(ds, sampler, 150.0, rng);
  return ds;
}

ScenarioDataset gen_large_n(std::uint64_t seed, std::size_t grid_intervals,
                            std::size_t processes) {
  ScenarioDataset ds;
  ds.scenario = Scenario::kLargeN;
  ds.seed = seed;
  Rng rng(seed);
  std::poisson_distribution<int> magnitude(3.0);
  std::bernoulli_distribution negative(0.5);
  auto draw_k = [&] {
    const int v1 = magnitude(rng);
    return negative(rng) ? -v1 : v1;
  };
  for (std::size_t i = 0; i < processes; ++i) {
    const double u = uniform01(rng);
    const int k1 = draw_k();
    const int k2 = draw_k();
    ds.warp_functions.push_back(
        [=](double t) { return u * zeta_warp(t, k1) + (1.0 - u) * zeta_warp(t, k2); });
  }
  for (const auto& f : ds.warp_functions) {
    ds.true_warps.push_back(MonotoneMap::sample([&](double t) { return clamp_unit(f(t)); },
                                                grid_intervals));
  }
  const GridDensitySampler sampler(large_n_density);
  ds.density_mass = sampler.mass();
  sample_processes(ds, sampler, 50.0, rng);
  return ds;
}

ScenarioDataset generate(Scenario scenario, std::uint64_t seed, std::size_t grid_intervals) {
  return scenario == Scenario::kSmallN ? gen_small_n(seed, grid_intervals)
                                       : gen_large_n(seed, grid_intervals);
}

WdmResult wdm(const std::vector<std::vector<PointPattern>>& registered_by_run,
              const std::vector<std::vector<PointPattern>>& originals_by_run) {
  if (registered_by_run.size() != originals_by_run.size()) {
    throw ConsistencyError("registered and original run counts differ");
  }
  if (registered_by_run.empty()) throw InputError("WDM needs at least one run");
  WdmResult out;
  double total = 0.0;
  for (std::size_t b = 0; b < registered_by_run.size(); ++b) {
    const auto& reg = registered_by_run[b];
    const auto& orig = originals_by_run[b];
    if (reg.size() != orig.size()) {
      throw ConsistencyError("run " + std::to_string(b) + ": process counts differ");
    }
    std::vector<double> row(reg.size());
    for (std::size_t i = 0; i < reg.size(); ++i) {
      row[i] = wasserstein(reg[i], orig[i]);
      total += row[i];
    }
    out.distances.push_back(std::move(row));
  }
  out.wdm = total / static_cast<double>(registered_by_run.size());
  return out;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, run); }

MonteCarloReport run_monte_carlo(Scenario scenario, std::size_t runs, const FitConfig& config,
                                 std::uint64_t seed) {
  if (runs < 1) throw InputError("Monte Carlo study needs at least one run");
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::vector<PointPattern>> registered(runs);
  std::vector<std::vector<PointPattern>> originals(runs);
  MonteCarloReport report;
  report.scenario = scenario;
  report.runs = runs;
  report.seed = seed;
  report.per_run.resize(runs);

  parallel_for(runs, config.threads, [&](std::size_t b) {
    const std::uint64_t rs = run_seed(seed, b);
    try {
      const ScenarioDataset ds = generate(scenario, derive_seed(rs, 0), config.grid_intervals);
      FitConfig run_config = config;
      run_config.mcmc.seed = rs;
      run_config.threads = 1;
      RegistrationResult result = fit_and_register(ds.warped, run_config);
      registered[b] = std::move(result.registered);
      originals[b] = ds.originals;
      auto& run = report.per_run[b];
      run.seed = rs;
      run.warp_redraws = ds.warp_redraws;
      for (const auto& p : ds.originals) run.counts.push_back(p.count());
    } catch (const Error& e) {
      rethrow_with_context(e, "run " + std::to_string(b));
    }
  });

  const WdmResult scored = wdm(registered, originals);
  report.wdm = scored.wdm;
  for (std::size_t b = 0; b < runs; ++b) report.per_run[b].distances = scored.distances[b];

  const std::size_t processes = scored.distances.front().size();
  for (std::size_t i = 0; i < processes; ++i) {
    std::vector<double> column;
    for (const auto& row : scored.distances) column.push_back(row[i]);
    std::sort(column.begin(), column.end());
    report.median_distance.push_back(sorted_quantile(column, 0.5));
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace bernreg
