#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bernreg/dp_gibbs.hpp"
#include "bernreg/point_pattern.hpp"
#include "bernreg/transport.hpp"

namespace bernreg {

/// Everything needed to go from observed patterns to a registration.
struct FitConfig {
  Hyperparameters hyper;
  McmcConfig mcmc;  // mcmc.seed is the master seed for all processes
  std::size_t grid_intervals = 512;
  double band_level = 0.95;
  unsigned threads = 1;

  void validate() const;
  SummaryOptions summary_options() const;
};

/// Seed used for process `index` under master seed `master`.
std::uint64_t process_seed(std::uint64_t master, std::size_t index);

/// Fits one chain per pattern; chain i runs with seed process_seed(mcmc.seed, i).
/// Errors carry the offending process index.
std::vector<PosteriorChain> fit_processes(std::span<const PointPattern> patterns,
                                          const FitConfig& config);

/// fit_processes followed by posterior_summaries.
RegistrationResult fit_and_register(std::span<const PointPattern> patterns,
                                    const FitConfig& config);

}  // namespace bernreg
