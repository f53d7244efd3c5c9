#include "bernreg/cli.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bernreg/errors.hpp"
#include "bernreg/io.hpp"
#include "bernreg/peaks.hpp"
#include "bernreg/pipeline.hpp"
#include "bernreg/simulate.hpp"

namespace bernreg {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid;
  std::optional<unsigned> threads;
  std::optional<std::string> config;
  std::string out_dir = ".";
};

struct BudgetFlags {
  std::optional<int> k_max;
  std::optional<int> iterations;
  std::optional<int> burn_in;
  std::optional<int> thinning;
  std::optional<double> band_level;
};

struct Settings {
  FitConfig fit;
  Scenario scenario = Scenario::kSmallN;
  std::size_t runs = 50;
  double level_above = 0.95;
  double level_below = 0.05;
  PeakOptions peak_options;
};

void add_budget_flags(CLI::App* cmd, BudgetFlags& flags) {
  cmd->add_option("--k-max", flags.k_max, "Largest Bernstein degree");
  cmd->add_option("--iterations", flags.iterations, "Gibbs sweeps per chain");
  cmd->add_option("--burn-in", flags.burn_in, "Discarded initial sweeps");
  cmd->add_option("--thinning", flags.thinning, "Keep every n-th post-burn-in sweep");
  cmd->add_option("--band-level", flags.band_level, "Credible band level");
}

// Overlays a config file onto the defaults. Recognized keys: seed, grid,
// threads, band_level, hyper{}, mcmc{}, simulate{scenario, runs},
// peaks{level_above, level_below, start_month, start_day, min_records}.
void apply_config_file(const Json& doc, Settings& s) {
  if (!doc.is_object()) throw InputError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    const std::string& key = item.key();
    const Json& v = item.value();
    try {
      if (key == "seed") {
        s.fit.mcmc.seed = v.get<std::uint64_t>();
      } else if (key == "grid") {
        s.fit.grid_intervals = v.get<std::size_t>();
      } else if (key == "threads") {
        s.fit.threads = v.get<unsigned>();
      } else if (key == "band_level") {
        s.fit.band_level = v.get<double>();
      } else if (key == "hyper") {
        io::apply_json(v, s.fit.hyper);
      } else if (key == "mcmc") {
        io::apply_json(v, s.fit.mcmc);
      } else if (key == "simulate") {
        for (const auto& sub : v.items()) {
          if (sub.key() == "scenario") {
            s.scenario = parse_scenario(sub.value().get<std::string>());
          } else if (sub.key() == "runs") {
            s.runs = sub.value().get<std::size_t>();
          } else {
            throw InputError("config simulate: unknown key '" + sub.key() + "'");
          }
        }
      } else if (key == "peaks") {
        for (const auto& sub : v.items()) {
          const Json& x = sub.value();
          if (sub.key() == "level_above") {
            s.level_above = x.get<double>();
          } else if (sub.key() == "level_below") {
            s.level_below = x.get<double>();
          } else if (sub.key() == "start_month") {
            s.peak_options.rule.start_month = x.get<unsigned>();
          } else if (sub.key() == "start_day") {
            s.peak_options.rule.start_day = x.get<unsigned>();
          } else if (sub.key() == "min_records") {
            s.peak_options.min_records = x.get<std::size_t>();
          } else {
            throw InputError("config peaks: unknown key '" + sub.key() + "'");
          }
        }
      } else {
        throw InputError("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw InputError("config: key '" + key + "' has the wrong type");
    }
  }
}

Settings resolve(const GlobalFlags& g, const BudgetFlags& b) {
  Settings s;
  if (g.config) apply_config_file(io::read_json_file(*g.config), s);
  if (g.seed) s.fit.mcmc.seed = *g.seed;
  if (g.grid) s.fit.grid_intervals = *g.grid;
  if (g.threads) s.fit.threads = *g.threads;
  if (b.k_max) s.fit.hyper.k_max = *b.k_max;
  if (b.iterations) s.fit.mcmc.iterations = *b.iterations;
  if (b.burn_in) s.fit.mcmc.burn_in = *b.burn_in;
  if (b.thinning) s.fit.mcmc.thinning = *b.thinning;
  if (b.band_level) s.fit.band_level = *b.band_level;
  return s;
}

void validate_peak_settings(const Settings& s) {
  for (double level : {s.level_above, s.level_below}) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("peak levels must lie in (0,1)");
  }
  const auto& r = s.peak_options.rule;
  if (r.start_month < 1 || r.start_month > 12 || r.start_day < 1 || r.start_day > 28) {
    throw InputError("year start must be a month 1..12 and a day 1..28");
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return stem + "_" + buf + ext;
}

Json echo(const std::string& command, const Settings& s, Json extra) {
  Json doc{{"command", command}, {"fit", io::to_json(s.fit)}};
  for (auto& item : extra.items()) doc[item.key()] = item.value();
  return doc;
}

int cmd_fit(const Settings& s, const std::string& input, const fs::path& out_dir,
            std::ostream& out) {
  s.fit.validate();
  const auto patterns = io::read_patterns(input);
  const Json config = echo("fit", s, Json{{"input", input}});
  const auto chains = fit_processes(patterns, s.fit);
  io::write_json_file((out_dir / "config.json").string(), config);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto path = out_dir / indexed("chain", i, ".json");
    io::write_json_file(path.string(), io::chain_to_json(chains[i], s.fit.hyper, i, config));
    out << path.string() << "\n";
  }
  return 0;
}

int cmd_register(const Settings& s, const std::vector<std::string>& chain_paths,
                 const std::string& observed_path, bool curves, const fs::path& out_dir,
                 std::ostream& out) {
  s.fit.validate();
  const auto observed = io::read_patterns(observed_path);
  std::vector<PosteriorChain> chains;
  for (const auto& p : chain_paths) chains.push_back(io::read_chain_file(p).chain);
  const Json config =
      echo("register", s, Json{{"chains", chain_paths}, {"observed", observed_path}});
  const RegistrationResult result = posterior_summaries(chains, observed, s.fit.summary_options());

  Json doc = io::registration_to_json(result);
  doc["config"] = config;
  io::write_json_file((out_dir / "config.json").string(), config);
  io::write_json_file((out_dir / "registration.json").string(), doc);
  if (curves) {
    const fs::path dir = prepare_out_dir((out_dir / "curves").string());
    io::write_text_file((dir / "frechet_mean.csv").string(), io::band_csv(result.frechet_mean));
    for (std::size_t i = 0; i < result.warps.size(); ++i) {
      io::write_text_file((dir / indexed("warp", i, ".csv")).string(),
                          io::band_csv(result.warps[i]));
    }
  }
  out << (out_dir / "registration.json").string() << "\n";
  return 0;
}

int cmd_simulate(const Settings& s, const fs::path& out_dir, std::ostream& out) {
  s.fit.validate();
  if (s.runs < 1) throw InputError("runs must be at least 1");
  const Json config =
      echo("simulate", s, Json{{"scenario", to_string(s.scenario)}, {"runs", s.runs}});
  const MonteCarloReport report = run_monte_carlo(s.scenario, s.runs, s.fit, s.fit.mcmc.seed);
  io::write_json_file((out_dir / "config.json").string(), config);
  io::write_json_file((out_dir / "report.json").string(), io::report_to_json(report, config));
  io::write_text_file((out_dir / "boxplot.csv").string(), io::boxplot_csv(report));
  io::write_json_file((out_dir / "timing.json").string(), io::timing_to_json(report));
  out << "wdm " << io::format_double(report.wdm) << "\n";
  return 0;
}

int cmd_peaks(const Settings& s, const std::string& csv, const fs::path& out_dir,
              std::ostream& out, std::ostream& err) {
  s.fit.validate();
  validate_peak_settings(s);
  const DailySeries series = read_daily_csv(csv);
  const Json config = echo("peaks", s,
                           Json{{"csv", csv},
                                {"level_above", s.level_above},
                                {"level_below", s.level_below},
                                {"start_month", s.peak_options.rule.start_month},
                                {"start_day", s.peak_options.rule.start_day},
                                {"min_records", s.peak_options.min_records}});
  const PeaksAnalysis analysis =
      analyze_peaks(series, s.level_above, s.level_below, s.fit, s.peak_options);
  for (const PeakSet* set : {&analysis.above, &analysis.below}) {
    for (const auto& y : set->years) {
      if (!y.degenerate) continue;
      err << Json{{"warning", Json{{"kind", "degenerate_year"},
                                   {"direction", to_string(set->direction)},
                                   {"year", y.year},
                                   {"message", "every record of the year reaches the threshold"}}}}
                 .dump()
          << "\n";
    }
  }

  io::write_json_file((out_dir / "config.json").string(), config);
  io::write_json_file((out_dir / "peaks.json").string(),
                      Json{{"above", io::peak_set_to_json(analysis.above)},
                           {"below", io::peak_set_to_json(analysis.below)},
                           {"config", config}});
  io::write_text_file((out_dir / "spi.csv").string(), io::spi_csv(analysis.scores));
  for (const auto& [name, reg] : {std::pair{"above", &analysis.registration_above},
                                  std::pair{"below", &analysis.registration_below}}) {
    Json doc = io::registration_to_json(*reg);
    doc["config"] = config;
    io::write_json_file((out_dir / (std::string("registration_") + name + ".json")).string(), doc);
  }
  const fs::path dir = prepare_out_dir((out_dir / "curves").string());
  for (std::size_t i = 0; i < analysis.scores.size(); ++i) {
    const std::string year = std::to_string(analysis.scores[i].year);
    io::write_text_file((dir / ("warp_above_" + year + ".csv")).string(),
                        io::band_csv(analysis.registration_above.warps[i]));
    io::write_text_file((dir / ("warp_below_" + year + ".csv")).string(),
                        io::band_csv(analysis.registration_below.warps[i]));
  }
  out << (out_dir / "spi.csv").string() << "\n";
  return 0;
}

void report_error(std::ostream& err, const std::string& kind, int code, const std::string& msg) {
  err << Json{{"error", Json{{"kind", kind}, {"exit_code", code}, {"message", msg}}}}.dump()
      << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian registration of phase-varying point processes", "bernreg"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed for all randomness");
  app.add_option("--grid", g.grid, "Grid intervals G");
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads");

  BudgetFlags budget;

  auto* fit = app.add_subcommand("fit", "Fit one posterior chain per process");
  std::string fit_input;
  fit->add_option("--input", fit_input, "Point patterns (.json or .csv)")->required();
  add_budget_flags(fit, budget);

  auto* reg = app.add_subcommand("register", "Register observed patterns from fitted chains");
  std::vector<std::string> chain_paths;
  std::string observed_path;
  bool curves = false;
  reg->add_option("--chains", chain_paths, "Chain files, one per process, in process order")
      ->required();
  reg->add_option("--observed", observed_path, "Observed patterns (.json or .csv)")->required();
  reg->add_flag("--curves", curves, "Also write per-curve CSV files");
  std::optional<double> reg_band;
  reg->add_option("--band-level", reg_band, "Credible band level");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on a synthetic scenario");
  std::optional<std::string> scenario;
  std::optional<std::size_t> runs;
  sim->add_option("--scenario", scenario, "small_n or large_n");
  sim->add_option("--runs", runs, "Number of simulated datasets B");
  add_budget_flags(sim, budget);

  auto* peaks = app.add_subcommand("peaks", "Annual peak registration and scores");
  std::string csv;
  std::optional<std::vector<double>> levels;
  std::optional<unsigned> start_month;
  std::optional<std::size_t> min_records;
  peaks->add_option("--csv", csv, "Daily series with header date,value")->required();
  peaks->add_option("--levels", levels, "Upper and lower quantile levels")->expected(2);
  peaks->add_option("--start-month", start_month, "First month of the climate year");
  peaks->add_option("--min-records", min_records, "Fewest records a year may have");
  add_budget_flags(peaks, budget);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "input", static_cast<int>(ExitCode::kInputError), e.what());
    return static_cast<int>(ExitCode::kInputError);
  }

  try {
    if (reg_band) budget.band_level = reg_band;
    Settings s = resolve(g, budget);
    if (scenario) s.scenario = parse_scenario(*scenario);
    if (runs) s.runs = *runs;
    if (levels) {
      s.level_above = (*levels)[0];
      s.level_below = (*levels)[1];
    }
    if (start_month) s.peak_options.rule.start_month = *start_month;
    if (min_records) s.peak_options.min_records = *min_records;

    const fs::path out_dir = prepare_out_dir(g.out_dir);
    if (fit->parsed()) return cmd_fit(s, fit_input, out_dir, out);
    if (reg->parsed()) return cmd_register(s, chain_paths, observed_path, curves, out_dir, out);
    if (sim->parsed()) return cmd_simulate(s, out_dir, out);
    return cmd_peaks(s, csv, out_dir, out, err);
  } catch (const Error& e) {
    report_error(err, e.kind(), static_cast<int>(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    report_error(err, "internal", 1, e.what());
    return 1;
  }
}

}  // namespace bernreg
