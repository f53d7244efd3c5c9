// Acceptance report: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/distributions/beta.hpp>

#include "bernreg/bernstein.hpp"
#include "bernreg/cli.hpp"
#include "bernreg/peaks.hpp"
#include "bernreg/pipeline.hpp"
#include "bernreg/simulate.hpp"
#include "bernreg/transport.hpp"

using namespace bernreg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::vector<double> random_simplex(int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> gam(1.5, 1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  double s = 0.0;
  for (double& x : w) s += (x = gam(rng));
  for (double& x : w) x /= s;
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) head += w[i];
  w.back() = std::max(0.0, 1.0 - head);
  return w;
}

PointPattern uniform_pattern(std::size_t size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(size);
  for (double& v : x) v = u(rng);
  return PointPattern(std::move(x));
}

PointPattern beta_pattern(std::size_t size, double a, double b, std::mt19937_64& rng) {
  std::vector<double> x(size);
  for (double& v : x) v = beta_draw(a, b, rng);
  return PointPattern(std::move(x));
}

// WDM over B = 50 small_n datasets at the default budgets.
Outcome wdm_replication(unsigned threads) {
  FitConfig config;
  config.threads = threads;
  const auto report = run_monte_carlo(Scenario::kSmallN, 50, config, config.mcmc.seed);
  std::string medians;
  for (double m : report.median_distance) medians += (medians.empty() ? "" : ", ") + fmt(m, 4);
  return {report.wdm >= 0.02 && report.wdm <= 0.08,
          "WDM = " + fmt(report.wdm) + " (target band [0.02, 0.08]); per-process medians [" +
              medians + "]; " + fmt(report.elapsed_seconds, 4) + " s"};
}

// Every posterior draw of 20 fitted fixtures registers to warps summing to n t.
Outcome mean_warp_identity() {
  constexpr std::size_t G = 512;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> processes(2, 6), size(15, 80);
  std::uniform_real_distribution<double> shape(0.7, 5.0);
  double worst_ratio = 0.0;
  std::size_t draws_checked = 0;
  for (int fixture = 0; fixture < 20; ++fixture) {
    const std::size_t n = processes(rng);
    std::vector<PointPattern> patterns;
    for (std::size_t i = 0; i < n; ++i) {
      patterns.push_back(beta_pattern(size(rng), shape(rng), shape(rng), rng));
    }
    FitConfig config;
    config.hyper.k_max = 40;
    config.mcmc.iterations = 600;
    config.mcmc.burn_in = 200;
    config.mcmc.thinning = 10;
    config.mcmc.seed = 100 + static_cast<std::uint64_t>(fixture);
    config.grid_intervals = G;
    const auto chains = fit_processes(patterns, config);
    const std::size_t draws = chains.front().size();
    std::vector<std::vector<double>> sums(draws, std::vector<double>(G + 1, 0.0));
    auto options = config.summary_options();
    options.on_warp_draw = [&](std::size_t, std::size_t j, const MonotoneMap& warp) {
      for (std::size_t g = 0; g <= G; ++g) sums[j][g] += warp[g];
    };
    posterior_summaries(chains, patterns, options);
    for (const auto& sum : sums) {
      double worst = 0.0;
      for (std::size_t g = 0; g <= G; ++g) {
        const double t = static_cast<double>(g) / G;
        worst = std::max(worst, std::abs(sum[g] - static_cast<double>(n) * t));
      }
      worst_ratio = std::max(worst_ratio, worst / (static_cast<double>(n) * 4.0 / G));
      ++draws_checked;
    }
  }
  return {worst_ratio <= 1.0, std::to_string(draws_checked) +
                                  " draws; worst deviation = " + fmt(worst_ratio, 4) +
                                  " x (n 4/G)"};
}

Outcome wasserstein_oracles() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  double worst_equal = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = size(rng);
    const auto a = uniform_pattern(m, rng);
    const auto b = uniform_pattern(m, rng);
    double d2 = 0.0;
    for (std::size_t l = 0; l < m; ++l) d2 += (a[l] - b[l]) * (a[l] - b[l]);
    worst_equal = std::max(worst_equal, std::abs(wasserstein(a, b) - std::sqrt(d2 / m)));
  }
  // Sizes dividing 8192 put every quantile jump on a cell boundary.
  constexpr std::size_t kLevels = 8192;
  std::uniform_int_distribution<int> power(0, 8);
  double worst_unequal = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = std::size_t{1} << power(rng);
    std::size_t n = m;
    while (n == m) n = std::size_t{1} << power(rng);
    const auto a = uniform_pattern(m, rng);
    const auto b = uniform_pattern(n, rng);
    double total = 0.0;
    for (std::size_t l = 0; l < kLevels; ++l) {
      const double u = (static_cast<double>(l) + 0.5) / kLevels;
      const double d = a[static_cast<std::size_t>(u * m)] - b[static_cast<std::size_t>(u * n)];
      total += d * d;
    }
    worst_unequal =
        std::max(worst_unequal, std::abs(wasserstein(a, b) - std::sqrt(total / kLevels)));
  }
  return {worst_equal <= 1e-12 && worst_unequal <= 1e-6,
          "equal sizes max error " + fmt(worst_equal, 3) + " (tol 1e-12); unequal sizes " +
              fmt(worst_unequal, 3) + " (tol 1e-6)"};
}

Outcome bernstein_suite() {
  std::mt19937_64 rng(77);
  double norm_err = 0.0;
  for (int k : {1, 2, 3, 10, 50, 100}) {
    const BernsteinMixture m(random_simplex(k, rng));
    constexpr int N = 4096;  // composite Simpson
    double s = bernstein_pdf(0.0, m) + bernstein_pdf(1.0, m);
    for (int i = 1; i < N; ++i) s += (i % 2 ? 4.0 : 2.0) * bernstein_pdf(double(i) / N, m);
    norm_err = std::max(norm_err, std::abs(s / (3.0 * N) - 1.0));
  }

  bool uniform_exact = true;
  for (int k : {1, 2, 9, 64, 100}) {
    const auto m = BernsteinMixture::uniform(k);
    for (int i = 0; i <= 64; ++i) {
      const double t = i / 64.0;
      uniform_exact = uniform_exact && std::abs(bernstein_pdf(t, m) - 1.0) <= 1e-12 &&
                      std::abs(bernstein_cdf(t, m) - t) <= 1e-12;
    }
  }

  double round_trip = 0.0;
  for (int k : {1, 2, 5, 25, 100}) {
    const BernsteinMixture m(random_simplex(k, rng));
    for (int i = 0; i <= 100; ++i) {
      const double p = i / 100.0;
      round_trip = std::max(round_trip, std::abs(bernstein_cdf(bernstein_quantile(p, m), m) - p));
    }
  }

  const auto m80 = weights_from_cdf([](double t) { return t * t * (3.0 - 2.0 * t); }, 80);
  double sup80 = 0.0;
  for (int g = 0; g <= 1024; ++g) {
    const double t = g / 1024.0;
    sup80 = std::max(sup80, std::abs(bernstein_pdf(t, m80) - 6.0 * t * (1.0 - t)));
  }
  return {norm_err <= 1e-8 && uniform_exact && round_trip <= 1e-8 && sup80 < 0.05,
          "normalization " + fmt(norm_err, 3) + ", uniform identity " +
              (uniform_exact ? "exact" : "broken") + ", round trip " + fmt(round_trip, 3) +
              ", Beta(2,2) sup error at k=80 " + fmt(sup80, 4)};
}

// Sup distance between the posterior-mean CDF and the Beta(2,5) truth.
double consistency_distance(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto data = beta_pattern(m, 2.0, 5.0, rng);
  Hyperparameters hyper;
  McmcConfig mcmc;
  mcmc.seed = derive_seed(seed, 1);
  const auto chain = fit_posterior(data, hyper, mcmc);
  constexpr std::size_t G = 512;
  std::vector<double> mean(G + 1, 0.0);
  for (const auto& draw : chain.draws) {
    const auto cdf = bernstein_cdf_grid(draw, G);
    for (std::size_t g = 0; g <= G; ++g) mean[g] += cdf[g];
  }
  const boost::math::beta_distribution<double> truth(2.0, 5.0);
  double sup = 0.0;
  for (std::size_t g = 0; g <= G; ++g) {
    const double t = static_cast<double>(g) / G;
    sup = std::max(sup, std::abs(mean[g] / chain.size() - boost::math::cdf(truth, t)));
  }
  return sup;
}

Outcome consistency_probe() {
  std::vector<double> medians;
  for (std::size_t m : {100u, 400u, 1600u}) {
    std::vector<double> d;
    for (std::uint64_t s = 0; s < 5; ++s) d.push_back(consistency_distance(m, 500 + s));
    std::nth_element(d.begin(), d.begin() + 2, d.end());
    medians.push_back(d[2]);
  }
  const bool decreasing = medians[1] < medians[0] && medians[2] < medians[1];
  return {decreasing && medians[2] < 0.05,
          "median sup distance m=100: " + fmt(medians[0], 4) + ", m=400: " + fmt(medians[1], 4) +
              ", m=1600: " + fmt(medians[2], 4)};
}

// Posterior-mean warps of simulate run 0 against the true warps, outside [0.4, 0.6].
Outcome warp_recovery() {
  FitConfig config;
  const std::uint64_t rs = run_seed(config.mcmc.seed, 0);
  const auto data = gen_small_n(derive_seed(rs, 0), config.grid_intervals);
  config.mcmc.seed = rs;
  const auto result = fit_and_register(data.warped, config);
  const std::size_t G = config.grid_intervals;
  double sup = 0.0;
  std::size_t covered = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& band = result.warps[i];
    for (std::size_t g = 0; g <= G; ++g) {
      const double t = static_cast<double>(g) / G;
      if (t >= 0.4 && t <= 0.6) continue;
      const double truth = data.true_warps[i][g];
      sup = std::max(sup, std::abs(band.mean[g] - truth));
      covered += band.lower[g] <= truth && truth <= band.upper[g];
      ++total;
    }
  }
  const double coverage = static_cast<double>(covered) / static_cast<double>(total);
  return {sup < 0.10 && coverage >= 0.80,
          "sup distance " + fmt(sup, 4) + " (< 0.10), band coverage " + fmt(100 * coverage, 4) +
              "% (>= 80%)"};
}

Outcome spi_closed_forms() {
  constexpr std::size_t G = 512;
  const double id = spi(MonotoneMap::identity(G));
  const double sq = spi(MonotoneMap::sample([](double t) { return t * t; }, G));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  bool mean_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const double a = u(rng), b = u(rng);
    mean_exact = mean_exact && spi_global(a, b) == (a + b) / 2.0;
  }
  return {id == 0.0 && std::abs(sq - 1.0 / 6.0) <= 1.0 / (G * G) && mean_exact,
          "spi(identity) = " + fmt(id) + ", |spi(t^2) - 1/6| = " + fmt(std::abs(sq - 1.0 / 6.0), 3) +
              " (tol " + fmt(1.0 / (G * G), 3) + "), global mean " +
              (mean_exact ? "exact" : "inexact")};
}

std::size_t type7_count(std::vector<double> values, double level, PeakDirection direction) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h + 1e-9));
  const double frac = std::max(0.0, h - static_cast<double>(lo));
  const double q = lo + 1 < values.size() ? values[lo] + frac * (values[lo + 1] - values[lo])
                                          : values[lo];
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [&](double v) {
    return direction == PeakDirection::kAbove ? v >= q - 1e-9 : v <= q + 1e-9;
  }));
}

Outcome application_smoke(const std::string& csv) {
  const auto series = read_daily_csv(csv);
  const YearRule rule;
  std::map<int, std::vector<double>> by_year;
  for (const auto& r : series.records()) by_year[rule.label(r.date)].push_back(r.value);

  SyntheticClimate climate;
  const auto largest = std::max_element(climate.shifts_days.begin(), climate.shifts_days.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
  const int shifted_year = climate.first_year + int(largest - climate.shifts_days.begin());

  bool pass = true;
  std::string detail;
  for (auto [hi, lo] : {std::pair{0.95, 0.05}, std::pair{0.975, 0.025}}) {
    FitConfig config;
    const auto a = analyze_peaks(series, hi, lo, config);
    bool counts_ok = a.scores.size() == by_year.size();
    std::size_t cmin = SIZE_MAX, cmax = 0;
    for (const auto& s : a.scores) {
      const auto& values = by_year.at(s.year);
      counts_ok = counts_ok && s.count_above == type7_count(values, hi, PeakDirection::kAbove) &&
                  s.count_below == type7_count(values, lo, PeakDirection::kBelow);
      cmin = std::min({cmin, s.count_above, s.count_below});
      cmax = std::max({cmax, s.count_above, s.count_below});
    }
    const auto best = std::max_element(a.scores.begin(), a.scores.end(),
                                       [](const YearScore& x, const YearScore& y) {
                                         return x.spi_global < y.spi_global;
                                       });
    pass = pass && counts_ok && best->year == shifted_year;
    detail += (detail.empty() ? "" : "; ") + fmt(hi * 100, 4) + "/" + fmt(lo * 100, 4) +
              ": counts " + (counts_ok ? "match" : "MISMATCH") + " [" + std::to_string(cmin) +
              ", " + std::to_string(cmax) + "], max SPI year " + std::to_string(best->year) +
              " (" + fmt(best->spi_global, 4) + ", expected " + std::to_string(shifted_year) + ")";
  }
  return {pass, detail};
}

int run_cli_args(std::vector<std::string> args) {
  args.insert(args.begin(), "bernreg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> file_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    if (rel == "timing.json") continue;  // wall clock
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[rel] = s.str();
  }
  return files;
}

Outcome determinism(const std::string& patterns, const std::string& csv) {
  const fs::path root =
      fs::temp_directory_path() / ("bernreg_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> budget = {"--k-max", "30", "--iterations", "400", "--burn-in",
                                           "100", "--thinning", "5", "--grid", "256"};
  const std::vector<std::string> grid_only = {"--grid", "256"};
  auto twice = [&](const std::string& name, std::vector<std::string> args,
                   const std::vector<std::string>& extra) {
    std::vector<std::map<std::string, std::string>> trees;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (name + std::to_string(rep));
      auto full = args;
      full.insert(full.end(), {"--out-dir", dir.string()});
      full.insert(full.end(), extra.begin(), extra.end());
      if (run_cli_args(full) != 0) return false;
      trees.push_back(file_tree(dir));
    }
    return !trees[0].empty() && trees[0] == trees[1];
  };

  std::string detail;
  bool pass = true;
  auto record = [&](const std::string& name, bool ok) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : ", ") + name + (ok ? " identical" : " DIFFERS");
  };
  record("fit", twice("fit", {"fit", "--input", patterns}, budget));
  std::vector<std::string> reg = {"register", "--observed", patterns, "--curves", "--chains"};
  for (const auto& e : fs::directory_iterator(root / "fit0")) {
    if (e.path().filename().string().rfind("chain_", 0) == 0) reg.push_back(e.path().string());
  }
  std::sort(reg.begin() + 5, reg.end());
  record("register", twice("register", reg, grid_only));
  record("simulate", twice("simulate", {"simulate", "--runs", "2"}, budget));
  record("peaks", twice("peaks", {"peaks", "--csv", csv}, budget));
  fs::remove_all(root);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria report"};
  std::vector<std::string> only;
  unsigned threads = 1;
  std::string data_dir = BERNREG_DATA_DIR;
  std::string report_path;
  app.add_option("--only", only, "Run only the named criteria");
  app.add_option("--threads", threads, "Worker threads for the Monte Carlo study");
  app.add_option("--data-dir", data_dir, "Directory with the packaged test data");
  app.add_option("--report", report_path, "Also write the PASS/FAIL lines to this file");
  CLI11_PARSE(app, argc, argv);
  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);

  const std::string patterns = data_dir + "/small_n_patterns.json";
  const std::string csv = data_dir + "/synthetic_daily.csv";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"wdm_replication", [&] { return wdm_replication(threads); }},
      {"mean_warp_identity", mean_warp_identity},
      {"wasserstein_oracle", wasserstein_oracles},
      {"bernstein_suite", bernstein_suite},
      {"consistency_probe", consistency_probe},
      {"warp_recovery", warp_recovery},
      {"spi_closed_forms", spi_closed_forms},
      {"application_smoke", [&] { return application_smoke(csv); }},
      {"determinism", [&] { return determinism(patterns, csv); }},
  };

  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string line = std::string(o.pass ? "PASS " : "FAIL ") + name + ": " + o.detail +
                             " [" + fmt(secs, 3) + " s]";
    std::cout << line << std::endl;
    if (report.is_open()) report << line << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
