#pragma once

// Marginal (Polya urn) Gibbs sampler for the Bernstein-Dirichlet model
//
//   x_j | k, G   ~ b(. | k, G)          (Bernstein density, weights from G)
//   G   | alpha  ~ DP(alpha, Beta(a0, b0))
//   k            ~ Uniform{1..k_max},   alpha ~ Gamma(shape, rate)
//
// augmented with one latent location y_j ~ G per observation, so that
// x_j | y_j, k ~ Beta(z, k - z + 1) with z = ceil(k * y_j).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bernreg/bernstein.hpp"
#include "bernreg/point_pattern.hpp"
#include "bernreg/random.hpp"

namespace bernreg {

struct Hyperparameters {
  int k_max = 100;
  double a0 = 1.0;  // Beta base measure
  double b0 = 1.0;
  double gamma_shape = 1.0;  // Gamma prior on the DP precision
  double gamma_rate = 1.0;

  void validate() const;
  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct McmcConfig {
  int iterations = 10000;
  int burn_in = 5000;
  int thinning = 5;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t saved_draws() const {
    return static_cast<std::size_t>((iterations - burn_in) / thinning);
  }
  friend bool operator==(const McmcConfig&, const McmcConfig&) = default;
};

struct GibbsState {
  std::vector<double> latent_locations;  // one y_j per observation
  std::vector<int> cluster_labels;       // compact labels 0..C-1, shared y within a label
  int k = 1;
  double alpha = 1.0;

  std::size_t cluster_count() const;
};

/// Post-burn-in draws for one process.
struct PosteriorChain {
  std::vector<BernsteinMixture> draws;
  std::vector<double> alphas;
  std::vector<int> cluster_counts;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thinning = 1;
  int total_iterations = 0;
  double max_weight_correction = 0.0;

  std::size_t size() const noexcept { return draws.size(); }
};

class BernsteinDpGibbs {
 public:
  /// Throws InputError for an empty pattern or invalid hyperparameters.
  BernsteinDpGibbs(const PointPattern& data, const Hyperparameters& hyper);

  std::size_t point_count() const noexcept { return log_x_.size(); }
  const Hyperparameters& hyper() const noexcept { return hyper_; }

  /// Every observation in its own cluster at its own location,
  /// k = ceil(k_max / 2), alpha at its prior mean.
  GibbsState initial_state() const;

  /// One full sweep: latent locations, cluster remixing, k given the
  /// locations, the k jump, then alpha.
  void sweep(GibbsState& state, Rng& rng) const;

  void update_latent_locations(GibbsState& state, Rng& rng) const;
  /// Redraws each cluster's shared location from its exact conditional. The
  /// likelihood depends on y only through the bin ceil(k y), so the bin is
  /// drawn from its discrete conditional and y from the base measure
  /// truncated to that bin.
  void remix_cluster_locations(GibbsState& state, Rng& rng) const;
  void update_k(GibbsState& state, Rng& rng) const;
  /// Metropolis-Hastings move on (k, latent locations). Proposes k' (a local
  /// step or a uniform draw), allocates the points to bins of k' one at a time
  /// in random order from their sequential urn conditionals, and draws the
  /// ties within each bin from their exact Polya-urn conditional. The
  /// acceptance ratio is the ratio of sequential predictive likelihoods of the
  /// proposed and current allocations. Returns whether the move was accepted.
  bool jump_k(GibbsState& state, Rng& rng) const;
  void update_alpha(GibbsState& state, Rng& rng) const;

  /// Urn probabilities for observation `point` given all other latent
  /// locations: one entry per remaining cluster (in label order, clusters
  /// emptied by removing the point are skipped), then the fresh-draw entry last.
  std::vector<double> assignment_probabilities(const GibbsState& state, std::size_t point) const;

  /// Normalized p(k | y, x) over k = 1..k_max (index 0 is k = 1).
  std::vector<double> k_conditional(const GibbsState& state) const;

  /// Draws the Bernstein weights of the current state: the increments of
  /// G | y over the bins ((i-1)/k, i/k] are Dirichlet(alpha * G*(bin_i) + n_i).
  /// `correction` receives the renormalization adjustment |sum(w) - 1|.
  BernsteinMixture draw_mixture(const GibbsState& state, Rng& rng,
                                double* correction = nullptr) const;

  /// Throws NumericError if the state breaks its invariants.
  void check_state(const GibbsState& state) const;

 private:
  struct ClusterStats {
    std::vector<double> size;
    std::vector<double> sum_log_x;
    std::vector<double> sum_log_1mx;
  };
  ClusterStats cluster_stats(const GibbsState& state) const;
  // Sum over the members of cluster c of the log kernel at (bin, k).
  double cluster_log_kernel(const ClusterStats& stats, std::size_t c, int bin, int k) const;

  double log_kernel(std::size_t j, int bin, int k) const;
  // exp(log kernel - log_scale[j]) per point j and bin, built on first use
  // of each degree. The cache makes a sampler unsafe to share across threads.
  struct KernelRows {
    std::vector<double> scaled;
    std::vector<double> log_scale;
  };
  const KernelRows& kernel_rows(int k) const;
  double draw_in_bin(int bin, int k, Rng& rng) const;

  Hyperparameters hyper_;
  std::vector<double> log_x_;
  std::vector<double> log_1mx_;
  std::vector<double> log_factorial_;
  double sequential_log_predictive(std::vector<int>& bins, const std::vector<std::size_t>& order,
                                   int k, double alpha, bool draw, Rng& rng) const;

  // Base-measure CDF at i/k and log bin masses, indexed [k][i].
  std::vector<std::vector<double>> base_cdf_;
  std::vector<std::vector<double>> log_bin_mass_;
  std::vector<std::vector<double>> bin_mass_;
  // log(k) + log C(k-1, bin-1), indexed [k][bin].
  std::vector<std::vector<double>> log_norm_;
  mutable std::vector<KernelRows> kernel_cache_;
};

/// ceil(k * y) clamped to 1..k.
int latent_bin(double y, int k);

/// Auxiliary-variable update for the DP precision: eta ~ Beta(alpha + 1, m),
/// then a two-component Gamma mixture given the cluster count.
double sample_dp_precision(double alpha, std::size_t n_clusters, std::size_t n_points,
                           double shape, double rate, Rng& rng);

/// Runs the sampler and keeps every `thinning`-th post-burn-in draw.
/// Bit-reproducible for a given (data, hyper, mcmc).
PosteriorChain fit_posterior(const PointPattern& data, const Hyperparameters& hyper,
                             const McmcConfig& mcmc);

}  // namespace bernreg
