#include "bernreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "bernreg/errors.hpp"

namespace bernreg::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T get_as(const Json& doc, const char* key, const std::string& where) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + ": field '" + key + "' is missing or has the wrong type");
  }
}

template <typename T>
void overlay(const Json& doc, const char* key, T& target, const std::string& where) {
  if (doc.contains(key)) target = get_as<T>(doc, key, where);
}

void reject_unknown(const Json& doc, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!doc.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& item : doc.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return item.key() == k; });
    if (!ok) throw InputError(where + ": unknown key '" + item.key() + "'");
  }
}

Json grid_json(std::size_t intervals) {
  Json grid = Json::array();
  for (std::size_t g = 0; g <= intervals; ++g) {
    grid.push_back(static_cast<double>(g) / static_cast<double>(intervals));
  }
  return grid;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source + ": malformed JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("failed writing " + path);
}

void write_json_file(const std::string& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

Json to_json(const Hyperparameters& hyper) {
  return Json{{"k_max", hyper.k_max},
              {"a0", hyper.a0},
              {"b0", hyper.b0},
              {"gamma_shape", hyper.gamma_shape},
              {"gamma_rate", hyper.gamma_rate}};
}

Json to_json(const McmcConfig& mcmc) {
  return Json{{"iterations", mcmc.iterations},
              {"burn_in", mcmc.burn_in},
              {"thinning", mcmc.thinning},
              {"seed", mcmc.seed}};
}

Json to_json(const FitConfig& config) {
  return Json{{"hyper", to_json(config.hyper)},
              {"mcmc", to_json(config.mcmc)},
              {"grid", config.grid_intervals},
              {"band_level", config.band_level},
              {"threads", config.threads}};
}

void apply_json(const Json& doc, Hyperparameters& hyper) {
  const std::string where = "hyper";
  reject_unknown(doc, {"k_max", "a0", "b0", "gamma_shape", "gamma_rate"}, where);
  overlay(doc, "k_max", hyper.k_max, where);
  overlay(doc, "a0", hyper.a0, where);
  overlay(doc, "b0", hyper.b0, where);
  overlay(doc, "gamma_shape", hyper.gamma_shape, where);
  overlay(doc, "gamma_rate", hyper.gamma_rate, where);
}

void apply_json(const Json& doc, McmcConfig& mcmc) {
  const std::string where = "mcmc";
  reject_unknown(doc, {"iterations", "burn_in", "thinning", "seed"}, where);
  overlay(doc, "iterations", mcmc.iterations, where);
  overlay(doc, "burn_in", mcmc.burn_in, where);
  overlay(doc, "thinning", mcmc.thinning, where);
  overlay(doc, "seed", mcmc.seed, where);
}

Json chain_to_json(const PosteriorChain& chain, const Hyperparameters& hyper,
                   std::optional<std::size_t> process, const Json& config_echo) {
  Json meta{{"seed", chain.seed},
            {"iterations", chain.total_iterations},
            {"burn_in", chain.burn_in},
            {"thinning", chain.thinning},
            {"draw_count", chain.size()},
            {"max_weight_correction", chain.max_weight_correction},
            {"hyper", to_json(hyper)}};
  if (process) meta["process"] = *process;
  if (!config_echo.is_null()) meta["config"] = config_echo;

  Json draws = Json::array();
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const auto w = chain.draws[j].weights();
    draws.push_back(Json{{"k", chain.draws[j].degree()},
                         {"weights", std::vector<double>(w.begin(), w.end())},
                         {"alpha", chain.alphas[j]},
                         {"clusters", chain.cluster_counts[j]}});
  }
  return Json{{"metadata", std::move(meta)}, {"draws", std::move(draws)}};
}

ChainFile chain_from_json(const Json& doc, const std::string& source) {
  if (!doc.is_object() || !doc.contains("metadata") || !doc.contains("draws")) {
    throw InputError(source + ": chain document needs 'metadata' and 'draws'");
  }
  const Json& meta = doc["metadata"];
  const std::string mwhere = source + " metadata";
  ChainFile out;
  out.chain.seed = get_as<std::uint64_t>(meta, "seed", mwhere);
  out.iterations = get_as<int>(meta, "iterations", mwhere);
  out.chain.total_iterations = out.iterations;
  out.chain.burn_in = get_as<int>(meta, "burn_in", mwhere);
  out.chain.thinning = get_as<int>(meta, "thinning", mwhere);
  if (meta.contains("max_weight_correction")) {
    out.chain.max_weight_correction = get_as<double>(meta, "max_weight_correction", mwhere);
  }
  if (meta.contains("process")) out.process = get_as<std::size_t>(meta, "process", mwhere);
  if (meta.contains("hyper")) apply_json(meta["hyper"], out.hyper);

  const Json& draws = doc["draws"];
  if (!draws.is_array() || draws.empty()) {
    throw InputError(source + ": 'draws' must be a nonempty array");
  }
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const std::string where = source + " draw " + std::to_string(j);
    const Json& d = draws[j];
    const int k = get_as<int>(d, "k", where);
    auto weights = get_as<std::vector<double>>(d, "weights", where);
    if (static_cast<int>(weights.size()) != k) {
      throw InputError(where + ": k = " + std::to_string(k) + " but " +
                       std::to_string(weights.size()) + " weights");
    }
    const double alpha = get_as<double>(d, "alpha", where);
    if (!(alpha > 0.0)) throw InputError(where + ": alpha must be positive");
    try {
      out.chain.draws.emplace_back(std::move(weights));
    } catch (const Error& e) {
      rethrow_with_context(e, where);
    }
    out.chain.alphas.push_back(alpha);
    out.chain.cluster_counts.push_back(d.contains("clusters") ? get_as<int>(d, "clusters", where)
                                                              : 0);
  }
  return out;
}

ChainFile read_chain_file(const std::string& path) {
  return chain_from_json(read_json_file(path), path);
}

Json curve_to_json(const MonotoneMap& curve) {
  const auto v = curve.values();
  return Json(std::vector<double>(v.begin(), v.end()));
}

Json band_to_json(const CurveBand& band) {
  return Json{{"mean", curve_to_json(band.mean)},
              {"lower", curve_to_json(band.lower)},
              {"upper", curve_to_json(band.upper)}};
}

Json registration_to_json(const RegistrationResult& result) {
  Json warps = Json::array();
  for (const auto& w : result.warps) warps.push_back(band_to_json(w));
  Json registered = Json::array();
  for (const auto& p : result.registered) {
    registered.push_back(std::vector<double>(p.points().begin(), p.points().end()));
  }
  Json intervals = Json::array();
  for (const auto& process : result.intervals) {
    Json rows = Json::array();
    for (const auto& iv : process) {
      rows.push_back(Json{{"observed", iv.observed},
                          {"mean", iv.mean},
                          {"lower", iv.lower},
                          {"upper", iv.upper}});
    }
    intervals.push_back(std::move(rows));
  }
  return Json{{"grid", grid_json(result.grid_intervals())},
              {"draws", result.draws},
              {"band_level", result.band_level},
              {"frechet_mean", band_to_json(result.frechet_mean)},
              {"warps", std::move(warps)},
              {"registered", std::move(registered)},
              {"intervals", std::move(intervals)}};
}

std::string curve_csv(const MonotoneMap& curve) {
  std::string out = "t,value\n";
  for (std::size_t g = 0; g <= curve.intervals(); ++g) {
    out += format_double(curve.knot(g)) + "," + format_double(curve[g]) + "\n";
  }
  return out;
}

std::string band_csv(const CurveBand& band) {
  std::string out = "t,value,lower,upper\n";
  for (std::size_t g = 0; g <= band.mean.intervals(); ++g) {
    out += format_double(band.mean.knot(g)) + "," + format_double(band.mean[g]) + "," +
           format_double(band.lower[g]) + "," + format_double(band.upper[g]) + "\n";
  }
  return out;
}

std::vector<PointPattern> parse_patterns_json(const Json& doc, const std::string& source) {
  if (!doc.is_array()) throw InputError(source + ": expected an array of arrays of locations");
  std::vector<PointPattern> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = source + " process " + std::to_string(i);
    if (!doc[i].is_array()) throw InputError(where + ": expected an array of locations");
    std::vector<double> xs;
    for (const auto& v : doc[i]) {
      if (!v.is_number()) throw InputError(where + ": locations must be numbers");
      xs.push_back(v.get<double>());
    }
    try {
      out.emplace_back(std::move(xs));
    } catch (const Error& e) {
      rethrow_with_context(e, where);
    }
  }
  if (out.empty()) throw InputError(source + ": no processes");
  return out;
}

std::vector<PointPattern> parse_patterns_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "process_id,location") {
    throw InputError(source + ": expected header 'process_id,location'");
  }
  std::map<std::size_t, std::vector<double>> rows;
  std::size_t max_id = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto comma = t.find(',');
    const std::string where = source + " line " + std::to_string(line_no);
    if (comma == std::string::npos) throw InputError(where + ": expected two fields");
    const std::string id_text = trim(t.substr(0, comma));
    const std::string loc_text = trim(t.substr(comma + 1));
    std::size_t id = 0;
    double loc = 0.0;
    const auto r1 = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (r1.ec != std::errc{} || r1.ptr != id_text.data() + id_text.size()) {
      throw InputError(where + ": bad process_id '" + id_text + "'");
    }
    const auto r2 = std::from_chars(loc_text.data(), loc_text.data() + loc_text.size(), loc);
    if (r2.ec != std::errc{} || r2.ptr != loc_text.data() + loc_text.size()) {
      throw InputError(where + ": bad location '" + loc_text + "'");
    }
    rows[id].push_back(loc);
    max_id = std::max(max_id, id);
  }
  if (rows.empty()) throw InputError(source + ": no rows");
  std::vector<PointPattern> out;
  for (std::size_t i = 0; i <= max_id; ++i) {
    try {
      out.emplace_back(rows.count(i) ? rows[i] : std::vector<double>{});
    } catch (const Error& e) {
      rethrow_with_context(e, source + " process " + std::to_string(i));
    }
  }
  return out;
}

std::vector<PointPattern> read_patterns(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".json") return parse_patterns_json(read_json_file(path), path);
  if (ext == ".csv") {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return parse_patterns_csv(in, path);
  }
  throw InputError(path + ": pattern files must end in .json or .csv");
}

Json patterns_to_json(const std::vector<PointPattern>& patterns) {
  Json out = Json::array();
  for (const auto& p : patterns) out.push_back(std::vector<double>(p.points().begin(), p.points().end()));
  return out;
}

Json report_to_json(const MonteCarloReport& report, const Json& config_echo) {
  Json runs = Json::array();
  for (std::size_t b = 0; b < report.per_run.size(); ++b) {
    const auto& r = report.per_run[b];
    runs.push_back(Json{{"run", b},
                        {"seed", r.seed},
                        {"counts", r.counts},
                        {"distances", r.distances},
                        {"warp_redraws", r.warp_redraws}});
  }
  Json out{{"scenario", to_string(report.scenario)},
           {"runs", report.runs},
           {"seed", report.seed},
           {"wdm", report.wdm},
           {"median_distance", report.median_distance},
           {"per_run", std::move(runs)}};
  if (!config_echo.is_null()) out["config"] = config_echo;
  return out;
}

Json timing_to_json(const MonteCarloReport& report) {
  return Json{{"elapsed_seconds", report.elapsed_seconds},
              {"runs", report.runs},
              {"seconds_per_run", report.elapsed_seconds / static_cast<double>(report.runs)}};
}

std::string boxplot_csv(const MonteCarloReport& report) {
  std::string out = "run,process,distance\n";
  for (std::size_t b = 0; b < report.per_run.size(); ++b) {
    const auto& d = report.per_run[b].distances;
    for (std::size_t i = 0; i < d.size(); ++i) {
      out += std::to_string(b) + "," + std::to_string(i) + "," + format_double(d[i]) + "\n";
    }
  }
  return out;
}

Json peak_set_to_json(const PeakSet& peaks) {
  Json years = Json::array();
  for (const auto& y : peaks.years) {
    Json dates = Json::array();
    for (const auto& d : y.dates) dates.push_back(format_iso_date(d));
    years.push_back(Json{{"year", y.year},
                         {"records", y.records},
                         {"threshold", y.threshold},
                         {"count", y.points.count()},
                         {"degenerate", y.degenerate},
                         {"dates", std::move(dates)},
                         {"points", std::vector<double>(y.points.points().begin(),
                                                        y.points.points().end())}});
  }
  return Json{{"direction", to_string(peaks.direction)},
              {"level", peaks.level},
              {"window", Json{{"min", peaks.window_min}, {"max", peaks.window_max}}},
              {"years", std::move(years)}};
}

std::string spi_csv(const std::vector<YearScore>& scores) {
  std::string out = "year,spi_below,spi_above,spi_global,lower,upper\n";
  for (const auto& s : scores) {
    out += std::to_string(s.year) + "," + format_double(s.spi_below) + "," +
           format_double(s.spi_above) + "," + format_double(s.spi_global) + "," +
           format_double(s.lower) + "," + format_double(s.upper) + "\n";
  }
  return out;
}

}  // namespace bernreg::io
