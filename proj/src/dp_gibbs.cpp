#include "bernreg/dp_gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "bernreg/errors.hpp"

namespace bernreg {

namespace {

constexpr double kBoundaryClamp = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    u -= std::exp(log_weights[i] - top);
    if (u < 0.0) return i;
  }
  // Rounding left a sliver of mass; fall back to the last reachable entry.
  for (std::size_t i = log_weights.size(); i-- > 0;) {
    if (log_weights[i] > kNegInf) return i;
  }
  return 0;
}

// Inverse-CDF draw from nonnegative weights summing to `total`.
std::size_t sample_linear(std::span<const double> weights, double total, Rng& rng) {
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

// Inverse-CDF draw from normalized probabilities; rounding slack goes to the
// last entry with positive mass.
int sample_index(const std::vector<double>& probs, Rng& rng) {
  double u = uniform01(rng);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  if (top == kNegInf) return kNegInf;
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

struct Clusters {
  std::vector<int> size;
  std::vector<double> location;
  std::vector<int> bin;
};

Clusters collect_clusters(const GibbsState& state) {
  Clusters c;
  const std::size_t count = state.cluster_count();
  c.size.assign(count, 0);
  c.location.assign(count, 0.0);
  c.bin.assign(count, 1);
  for (std::size_t j = 0; j < state.cluster_labels.size(); ++j) {
    const auto label = static_cast<std::size_t>(state.cluster_labels[j]);
    if (c.size[label]++ == 0) {
      c.location[label] = state.latent_locations[j];
      c.bin[label] = latent_bin(state.latent_locations[j], state.k);
    }
  }
  return c;
}

// Relabels clusters 0..C-1 in order of first appearance and rewrites locations.
void compact_labels(GibbsState& state, const std::vector<double>& slot_location) {
  std::vector<int> remap(slot_location.size(), -1);
  int next = 0;
  for (std::size_t j = 0; j < state.cluster_labels.size(); ++j) {
    const int slot = state.cluster_labels[j];
    if (remap[slot] < 0) remap[slot] = next++;
    state.cluster_labels[j] = remap[slot];
    state.latent_locations[j] = slot_location[slot];
  }
}

}  // namespace

int latent_bin(double y, int k) {
  return std::clamp(static_cast<int>(std::ceil(k * y)), 1, k);
}

std::size_t GibbsState::cluster_count() const {
  if (cluster_labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(cluster_labels.begin(), cluster_labels.end())) + 1;
}

void Hyperparameters::validate() const {
  if (k_max < 1) throw InputError("k_max must be >= 1");
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw InputError("base measure parameters a0, b0 must be > 0");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) {
    throw InputError("gamma_shape and gamma_rate must be > 0");
  }
}

void McmcConfig::validate() const {
  if (burn_in < 0) throw InputError("burn_in must be >= 0");
  if (iterations <= burn_in) throw InputError("iterations must exceed burn_in");
  if (thinning < 1) throw InputError("thinning must be >= 1");
  if (saved_draws() == 0) throw InputError("mcmc settings keep no draws");
}

BernsteinDpGibbs::BernsteinDpGibbs(const PointPattern& data, const Hyperparameters& hyper)
    : hyper_(hyper) {
  hyper_.validate();
  if (data.empty()) throw InputError("cannot fit an empty point pattern");

  log_x_.reserve(data.count());
  log_1mx_.reserve(data.count());
  for (double x : data.points()) {
    const double clamped = std::clamp(x, kBoundaryClamp, 1.0 - kBoundaryClamp);
    log_x_.push_back(std::log(clamped));
    log_1mx_.push_back(std::log1p(-clamped));
  }

  log_factorial_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  for (std::size_t n = 0; n < log_factorial_.size(); ++n) {
    log_factorial_[n] = std::lgamma(static_cast<double>(n) + 1.0);
  }

  const bool uniform_base = hyper_.a0 == 1.0 && hyper_.b0 == 1.0;
  base_cdf_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  log_bin_mass_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  kernel_cache_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  bin_mass_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  log_norm_.resize(static_cast<std::size_t>(hyper_.k_max) + 1);
  for (int k = 1; k <= hyper_.k_max; ++k) {
    auto& cdf = base_cdf_[k];
    auto& log_mass = log_bin_mass_[k];
    cdf.resize(static_cast<std::size_t>(k) + 1);
    log_mass.resize(static_cast<std::size_t>(k) + 1, kNegInf);
    for (int i = 0; i <= k; ++i) {
      const double t = static_cast<double>(i) / k;
      cdf[i] = (i == 0) ? 0.0
               : (i == k) ? 1.0
               : uniform_base ? t
                              : boost::math::ibeta(hyper_.a0, hyper_.b0, t);
    }
    for (int i = 1; i <= k; ++i) {
      const double mass = uniform_base ? 1.0 / k : cdf[i] - cdf[i - 1];
      log_mass[i] = mass > 0.0 ? std::log(mass) : kNegInf;
    }
    bin_mass_[k].resize(static_cast<std::size_t>(k) + 1, 0.0);
    log_norm_[k].resize(static_cast<std::size_t>(k) + 1, 0.0);
    for (int i = 1; i <= k; ++i) {
      bin_mass_[k][i] = std::exp(log_mass[i]);
      log_norm_[k][i] = std::log(static_cast<double>(k)) + log_factorial_[k - 1] -
                        log_factorial_[i - 1] - log_factorial_[k - i];
    }
  }
}

double BernsteinDpGibbs::log_kernel(std::size_t j, int bin, int k) const {
  return log_norm_[k][bin] + (bin - 1) * log_x_[j] + (k - bin) * log_1mx_[j];
}

const BernsteinDpGibbs::KernelRows& BernsteinDpGibbs::kernel_rows(int k) const {
  KernelRows& rows = kernel_cache_[static_cast<std::size_t>(k)];
  if (!rows.log_scale.empty()) return rows;
  const std::size_t m = point_count();
  rows.scaled.resize(m * static_cast<std::size_t>(k));
  rows.log_scale.resize(m);
  std::vector<double> row(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < m; ++j) {
    for (int i = 1; i <= k; ++i) row[i - 1] = log_kernel(j, i, k);
    const double top = *std::max_element(row.begin(), row.end());
    rows.log_scale[j] = top;
    for (int i = 0; i < k; ++i) rows.scaled[j * k + i] = std::exp(row[i] - top);
  }
  return rows;
}

double BernsteinDpGibbs::draw_in_bin(int bin, int k, Rng& rng) const {
  const double u = uniform01(rng);
  double y;
  if (hyper_.a0 == 1.0 && hyper_.b0 == 1.0) {
    y = (bin - 1 + u) / k;
  } else {
    const double lo = base_cdf_[k][bin - 1];
    const double hi = base_cdf_[k][bin];
    y = boost::math::ibeta_inv(hyper_.a0, hyper_.b0, lo + u * (hi - lo));
  }
  // Keep y strictly inside its bin so ceil(k y) reproduces the drawn bin.
  if (latent_bin(y, k) != bin || y <= 0.0) y = (bin - 0.5) / k;
  return y;
}

GibbsState BernsteinDpGibbs::initial_state() const {
  GibbsState state;
  const std::size_t m = point_count();
  state.latent_locations.resize(m);
  state.cluster_labels.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    state.latent_locations[j] = std::exp(log_x_[j]);
    state.cluster_labels[j] = static_cast<int>(j);
  }
  state.k = (hyper_.k_max + 1) / 2;
  state.alpha = hyper_.gamma_shape / hyper_.gamma_rate;
  return state;
}

void BernsteinDpGibbs::sweep(GibbsState& state, Rng& rng) const {
  update_latent_locations(state, rng);
  remix_cluster_locations(state, rng);
  update_k(state, rng);
  jump_k(state, rng);
  update_alpha(state, rng);
}

BernsteinDpGibbs::ClusterStats BernsteinDpGibbs::cluster_stats(const GibbsState& state) const {
  const std::size_t count = state.cluster_count();
  ClusterStats stats;
  stats.size.assign(count, 0.0);
  stats.sum_log_x.assign(count, 0.0);
  stats.sum_log_1mx.assign(count, 0.0);
  for (std::size_t j = 0; j < point_count(); ++j) {
    const auto c = static_cast<std::size_t>(state.cluster_labels[j]);
    stats.size[c] += 1.0;
    stats.sum_log_x[c] += log_x_[j];
    stats.sum_log_1mx[c] += log_1mx_[j];
  }
  return stats;
}

double BernsteinDpGibbs::cluster_log_kernel(const ClusterStats& stats, std::size_t c, int bin,
                                            int k) const {
  return stats.size[c] * log_norm_[k][bin] + (bin - 1) * stats.sum_log_x[c] +
         (k - bin) * stats.sum_log_1mx[c];
}

std::vector<double> BernsteinDpGibbs::assignment_probabilities(const GibbsState& state,
                                                               std::size_t point) const {
  check_state(state);
  const int k = state.k;
  Clusters clusters = collect_clusters(state);
  --clusters.size[state.cluster_labels[point]];

  std::vector<double> row(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) row[i - 1] = log_kernel(point, i, k) + log_bin_mass_[k][i];

  std::vector<double> log_w;
  for (std::size_t c = 0; c < clusters.size.size(); ++c) {
    if (clusters.size[c] == 0) continue;
    log_w.push_back(std::log(static_cast<double>(clusters.size[c])) +
                    log_kernel(point, clusters.bin[c], k));
  }
  log_w.push_back(std::log(state.alpha) + log_sum_exp(row));

  const double norm = log_sum_exp(log_w);
  for (double& lw : log_w) lw = std::exp(lw - norm);
  return log_w;
}

void BernsteinDpGibbs::update_latent_locations(GibbsState& state, Rng& rng) const {
  const int k = state.k;
  const std::size_t m = point_count();
  const auto& mass = bin_mass_[k];
  // Every weight for point j shares the factor exp(log_scale[j]), which cancels.
  const KernelRows& rows = kernel_rows(k);

  Clusters clusters = collect_clusters(state);
  std::vector<int> free_slots;
  std::vector<double> w;
  std::vector<std::size_t> slot_of;
  std::vector<double> fresh(static_cast<std::size_t>(k));

  for (std::size_t j = 0; j < m; ++j) {
    const double* kern = &rows.scaled[j * k];
    const int current = state.cluster_labels[j];
    if (--clusters.size[current] == 0) free_slots.push_back(current);

    w.clear();
    slot_of.clear();
    double total = 0.0;
    for (std::size_t c = 0; c < clusters.size.size(); ++c) {
      if (clusters.size[c] == 0) continue;
      const double wc = clusters.size[c] * kern[clusters.bin[c] - 1];
      w.push_back(wc);
      total += wc;
      slot_of.push_back(c);
    }
    double fresh_total = 0.0;
    for (int i = 0; i < k; ++i) fresh_total += (fresh[i] = mass[i + 1] * kern[i]);
    w.push_back(state.alpha * fresh_total);
    total += w.back();

    const std::size_t pick = sample_linear(w, total, rng);
    int slot;
    if (pick < slot_of.size()) {
      slot = static_cast<int>(slot_of[pick]);
    } else {
      const int bin = static_cast<int>(sample_linear(fresh, fresh_total, rng)) + 1;
      if (!free_slots.empty()) {
        slot = free_slots.back();
        free_slots.pop_back();
      } else {
        slot = static_cast<int>(clusters.size.size());
        clusters.size.push_back(0);
        clusters.location.push_back(0.0);
        clusters.bin.push_back(bin);
      }
      clusters.location[slot] = draw_in_bin(bin, k, rng);
      clusters.bin[slot] = bin;
    }
    if (clusters.size[slot]++ == 0) {
      free_slots.erase(std::remove(free_slots.begin(), free_slots.end(), slot), free_slots.end());
    }
    state.cluster_labels[j] = slot;
  }
  compact_labels(state, clusters.location);
}

void BernsteinDpGibbs::remix_cluster_locations(GibbsState& state, Rng& rng) const {
  const int k = state.k;
  const ClusterStats stats = cluster_stats(state);
  const std::size_t count = stats.size.size();
  std::vector<double> slot_location(count);
  std::vector<double> row(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < count; ++c) {
    for (int i = 1; i <= k; ++i) row[i - 1] = cluster_log_kernel(stats, c, i, k) + log_bin_mass_[k][i];
    const int bin = static_cast<int>(sample_log_categorical(row, rng)) + 1;
    slot_location[c] = draw_in_bin(bin, k, rng);
  }
  compact_labels(state, slot_location);
}

std::vector<double> BernsteinDpGibbs::k_conditional(const GibbsState& state) const {
  const std::size_t m = point_count();
  std::vector<double> log_p(static_cast<std::size_t>(hyper_.k_max));
  for (int k = 1; k <= hyper_.k_max; ++k) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      total += log_kernel(j, latent_bin(state.latent_locations[j], k), k);
    }
    log_p[k - 1] = total;
  }
  const double norm = log_sum_exp(log_p);
  for (double& lp : log_p) lp = std::exp(lp - norm);
  return log_p;
}

void BernsteinDpGibbs::update_k(GibbsState& state, Rng& rng) const {
  state.k = sample_index(k_conditional(state), rng) + 1;
}

// Sum over points, in `order`, of log p(x_j | earlier points, z of earlier
// points) under bin allocations `bins` at degree k; when `draw` is set the
// bins are sampled from those same sequential conditionals instead.
double BernsteinDpGibbs::sequential_log_predictive(std::vector<int>& bins,
                                                   const std::vector<std::size_t>& order, int k,
                                                   double alpha, bool draw, Rng& rng) const {
  const KernelRows& rows = kernel_rows(k);
  const auto& mass = bin_mass_[k];
  std::vector<double> count(static_cast<std::size_t>(k) + 1, 0.0);
  std::vector<double> row(static_cast<std::size_t>(k));
  double total = 0.0;
  double seated = 0.0;
  for (std::size_t j : order) {
    const double* kern = &rows.scaled[j * k];
    double sum = 0.0;
    for (int i = 1; i <= k; ++i) sum += (row[i - 1] = (alpha * mass[i] + count[i]) * kern[i - 1]);
    if (!(sum > 0.0)) return kNegInf;
    total += std::log(sum) + rows.log_scale[j] - std::log(alpha + seated);
    if (draw) bins[j] = static_cast<int>(sample_linear(row, sum, rng)) + 1;
    count[bins[j]] += 1.0;
    seated += 1.0;
  }
  return total;
}

bool BernsteinDpGibbs::jump_k(GibbsState& state, Rng& rng) const {
  const int k_max = hyper_.k_max;
  if (k_max == 1) return false;
  constexpr int kLocalStep = 5;
  const int k = state.k;
  int proposal;
  if (uniform01(rng) < 0.5) {
    const int step = 1 + static_cast<int>(uniform01(rng) * kLocalStep);
    proposal = uniform01(rng) < 0.5 ? k - step : k + step;
    if (proposal < 1 || proposal > k_max) return false;
  } else {
    proposal = 1 + static_cast<int>(uniform01(rng) * (k_max - 1));
    if (proposal >= k) ++proposal;
  }

  const std::size_t m = point_count();
  std::vector<int> bins(m), new_bins(m);
  for (std::size_t j = 0; j < m; ++j) bins[j] = latent_bin(state.latent_locations[j], k);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const double log_ratio =
      sequential_log_predictive(new_bins, order, proposal, state.alpha, true, rng) -
      sequential_log_predictive(bins, order, k, state.alpha, false, rng);
  if (!(std::log(uniform01(rng)) < log_ratio)) return false;

  // Within a bin the DP restricted to it is DP(alpha G*(bin), G*|bin), so the
  // shared locations follow a Polya urn with that precision.
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(proposal) + 1);
  for (std::size_t j = 0; j < m; ++j) members[new_bins[j]].push_back(j);
  std::vector<double> slot_location;
  std::vector<double> slot_size;
  for (int i = 1; i <= proposal; ++i) {
    const double precision = state.alpha * bin_mass_[proposal][i];
    const std::size_t first_slot = slot_location.size();
    double seated = 0.0;
    for (std::size_t j : members[i]) {
      double u = uniform01(rng) * (precision + seated);
      std::size_t slot = slot_location.size();
      for (std::size_t s = first_slot; s < slot_location.size(); ++s) {
        u -= slot_size[s];
        if (u < 0.0) {
          slot = s;
          break;
        }
      }
      if (slot == slot_location.size()) {
        slot_location.push_back(draw_in_bin(i, proposal, rng));
        slot_size.push_back(0.0);
      }
      slot_size[slot] += 1.0;
      state.cluster_labels[j] = static_cast<int>(slot);
      seated += 1.0;
    }
  }
  state.k = proposal;
  compact_labels(state, slot_location);
  return true;
}

void BernsteinDpGibbs::update_alpha(GibbsState& state, Rng& rng) const {
  state.alpha = sample_dp_precision(state.alpha, state.cluster_count(), point_count(),
                                    hyper_.gamma_shape, hyper_.gamma_rate, rng);
}

BernsteinMixture BernsteinDpGibbs::draw_mixture(const GibbsState& state, Rng& rng,
                                                double* correction) const {
  const int k = state.k;
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (double y : state.latent_locations) counts[latent_bin(y, k) - 1] += 1.0;

  std::vector<double> w(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double shape = state.alpha * std::exp(log_bin_mass_[k][i]) + counts[i - 1];
    w[i - 1] = shape > 0.0 ? gamma_draw(shape, 1.0, rng) : 0.0;
    total += w[i - 1];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("Dirichlet weight draw degenerated (total " + std::to_string(total) + ")");
  }
  for (double& x : w) x /= total;
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= sum;
  if (correction != nullptr) *correction = std::abs(sum - 1.0);
  return BernsteinMixture(std::move(w));
}

void BernsteinDpGibbs::check_state(const GibbsState& state) const {
  const std::size_t m = point_count();
  if (state.latent_locations.size() != m || state.cluster_labels.size() != m) {
    throw NumericError("Gibbs state size does not match the data");
  }
  if (state.k < 1 || state.k > hyper_.k_max) throw NumericError("Gibbs state k out of range");
  if (!(state.alpha > 0.0)) throw NumericError("Gibbs state alpha must be positive");
  const std::size_t count = state.cluster_count();
  std::vector<double> location(count, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < m; ++j) {
    const int label = state.cluster_labels[j];
    const double y = state.latent_locations[j];
    if (label < 0) throw NumericError("negative cluster label");
    if (!(y >= 0.0 && y <= 1.0)) throw NumericError("latent location outside [0,1]");
    if (std::isnan(location[label])) {
      location[label] = y;
    } else if (location[label] != y) {
      throw NumericError("cluster " + std::to_string(label) + " has mixed latent locations");
    }
  }
  for (double y : location) {
    if (std::isnan(y)) throw NumericError("cluster labels are not compact");
  }
}

double sample_dp_precision(double alpha, std::size_t n_clusters, std::size_t n_points,
                           double shape, double rate, Rng& rng) {
  const double m = static_cast<double>(n_points);
  const double c = static_cast<double>(n_clusters);
  const double eta = beta_draw(alpha + 1.0, m, rng);
  const double posterior_rate = rate - std::log(eta);
  const double odds = (shape + c - 1.0) / (m * posterior_rate);
  const double mix = odds / (1.0 + odds);
  const double draw_shape = uniform01(rng) < mix ? shape + c : shape + c - 1.0;
  const double draw = gamma_draw(draw_shape, posterior_rate, rng);
  // Guard against a zero from a tiny shape; alpha must stay positive.
  return std::max(draw, std::numeric_limits<double>::min());
}

PosteriorChain fit_posterior(const PointPattern& data, const Hyperparameters& hyper,
                             const McmcConfig& mcmc) {
  mcmc.validate();
  const BernsteinDpGibbs sampler(data, hyper);
  Rng rng(mcmc.seed);
  GibbsState state = sampler.initial_state();

  PosteriorChain chain;
  chain.seed = mcmc.seed;
  chain.burn_in = mcmc.burn_in;
  chain.thinning = mcmc.thinning;
  chain.total_iterations = mcmc.iterations;
  const std::size_t keep = mcmc.saved_draws();
  chain.draws.reserve(keep);
  chain.alphas.reserve(keep);
  chain.cluster_counts.reserve(keep);

  for (int it = 0; it < mcmc.iterations && chain.draws.size() < keep; ++it) {
    sampler.sweep(state, rng);
    if (it < mcmc.burn_in || (it - mcmc.burn_in + 1) % mcmc.thinning != 0) continue;
    double correction = 0.0;
    chain.draws.push_back(sampler.draw_mixture(state, rng, &correction));
    chain.alphas.push_back(state.alpha);
    chain.cluster_counts.push_back(static_cast<int>(state.cluster_count()));
    chain.max_weight_correction = std::max(chain.max_weight_correction, correction);
  }
  if (chain.max_weight_correction >= 1e-10) {
    throw NumericError("weight renormalization exceeded 1e-10");
  }
  return chain;
}

}  // namespace bernreg
