#pragma once

// Synthetic phase-varying point processes and the Monte Carlo harness that
// scores registrations by their Wasserstein distance to the unwarped truth.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bernreg/monotone_map.hpp"
#include "bernreg/pipeline.hpp"
#include "bernreg/point_pattern.hpp"
#include "bernreg/random.hpp"

namespace bernreg {

enum class Scenario { kSmallN, kLargeN };

std::string to_string(Scenario scenario);
/// Accepts "small_n" / "large_n"; throws InputError otherwise.
Scenario parse_scenario(const std::string& name);

/// Inverse-CDF sampler for a density on [0,1], tabulated on a fine grid.
/// The density is renormalized over [0,1]; `mass()` reports the pre-normalization integral.
class GridDensitySampler {
 public:
  GridDensitySampler(const std::function<double(double)>& density, std::size_t intervals = 16384);

  double operator()(Rng& rng) const;
  double cdf(double t) const;
  double mass() const noexcept { return mass_; }

 private:
  std::vector<double> cdf_;
  double mass_ = 0.0;
};

double normal_pdf(double t, double mean, double sd);
double beta_pdf(double t, double a, double b);
/// Regularized incomplete beta I_t(a, b), i.e. the Beta(a, b) distribution function.
double beta_cdf(double t, double a, double b);

/// Mixture densities of the two scenarios, before truncation to [0,1].
double small_n_density(double t);
double large_n_density(double t);

/// zeta_k(t) = t - sin(pi t k) / (|k| pi), with zeta_0 the identity.
double zeta_warp(double t, int k);

struct ScenarioDataset {
  Scenario scenario = Scenario::kSmallN;
  std::uint64_t seed = 0;
  std::vector<PointPattern> originals;
  std::vector<PointPattern> warped;
  std::vector<MonotoneMap> true_warps;                       // sampled on the dataset grid
  std::vector<std::function<double(double)>> warp_functions;  // exact warps
  int warp_redraws = 0;        // rejected non-monotone warp draws
  double density_mass = 1.0;   // integral of the untruncated density over [0,1]

  std::size_t size() const noexcept { return originals.size(); }
};

/// Three processes, Poisson(150) points from the bimodal-plus-beta mixture;
/// T1, T2 are Beta(a,b) distribution functions with a, b ~ U[1,3] and
/// T3 = 3t - T1 - T2 (redrawn until monotone).
ScenarioDataset gen_small_n(std::uint64_t seed, std::size_t grid_intervals = 512);

/// `processes` processes (30 by default) with Poisson(50) points; warps are
/// U zeta_{K1} + (1 - U) zeta_{K2} with K = V1 V2, V1 ~ Poisson(3), V2 = +-1.
ScenarioDataset gen_large_n(std::uint64_t seed, std::size_t grid_intervals = 512,
                            std::size_t processes = 30);

ScenarioDataset generate(Scenario scenario, std::uint64_t seed, std::size_t grid_intervals);

struct WdmResult {
  double wdm = 0.0;
  std::vector<std::vector<double>> distances;  // [run][process]
};

/// (1/B) sum_b sum_i d(registered_bi, original_bi). Throws ConsistencyError on shape mismatch.
WdmResult wdm(const std::vector<std::vector<PointPattern>>& registered_by_run,
              const std::vector<std::vector<PointPattern>>& originals_by_run);

struct MonteCarloRun {
  std::uint64_t seed = 0;
  std::vector<std::size_t> counts;
  std::vector<double> distances;
  int warp_redraws = 0;
};

struct MonteCarloReport {
  Scenario scenario = Scenario::kSmallN;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  double wdm = 0.0;
  std::vector<MonteCarloRun> per_run;
  std::vector<double> median_distance;  // per process, across runs
  double elapsed_seconds = 0.0;
};

/// Seed of run b under a master seed; datasets use derive_seed(run_seed, 0)
/// and the fits use run_seed as their master seed.
std::uint64_t run_seed(std::uint64_t master, std::size_t run);

/// Generates, fits, registers and scores `runs` datasets. Runs are spread over
/// config.threads workers; the report does not depend on the thread count.
/// A failing run aborts with its index in the message.
MonteCarloReport run_monte_carlo(Scenario scenario, std::size_t runs, const FitConfig& config,
                                 std::uint64_t seed);

}  // namespace bernreg
