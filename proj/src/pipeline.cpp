#include "bernreg/pipeline.hpp"

#include <string>

#include "bernreg/errors.hpp"
#include "bernreg/parallel.hpp"
#include "bernreg/random.hpp"

namespace bernreg {

void FitConfig::validate() const {
  hyper.validate();
  mcmc.validate();
  if (grid_intervals < 2) throw InputError("grid must have at least 2 intervals");
  if (!(band_level > 0.0 && band_level < 1.0)) throw InputError("band level must lie in (0,1)");
}

SummaryOptions FitConfig::summary_options() const {
  SummaryOptions options;
  options.grid_intervals = grid_intervals;
  options.band_level = band_level;
  options.threads = threads;
  return options;
}

std::uint64_t process_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, index);
}

std::vector<PosteriorChain> fit_processes(std::span<const PointPattern> patterns,
                                          const FitConfig& config) {
  config.validate();
  if (patterns.empty()) throw InputError("no point patterns to fit");
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    if (patterns[i].empty()) throw InputError("process " + std::to_string(i) + " is empty");
  }
  std::vector<PosteriorChain> chains(patterns.size());
  parallel_for(patterns.size(), config.threads, [&](std::size_t i) {
    McmcConfig mcmc = config.mcmc;
    mcmc.seed = process_seed(config.mcmc.seed, i);
    try {
      chains[i] = fit_posterior(patterns[i], config.hyper, mcmc);
    } catch (const Error& e) {
      rethrow_with_context(e, "process " + std::to_string(i));
    }
  });
  return chains;
}

RegistrationResult fit_and_register(std::span<const PointPattern> patterns,
                                    const FitConfig& config) {
  const auto chains = fit_processes(patterns, config);
  return posterior_summaries(chains, patterns, config.summary_options());
}

}  // namespace bernreg
