#pragma once

// JSON and CSV serialization of chains, registrations, Monte Carlo reports,
// peak sets and configurations. Numbers are written in shortest round-trip
// form so that identical inputs give byte-identical files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bernreg/dp_gibbs.hpp"
#include "bernreg/monotone_map.hpp"
#include "bernreg/peaks.hpp"
#include "bernreg/pipeline.hpp"
#include "bernreg/point_pattern.hpp"
#include "bernreg/simulate.hpp"
#include "bernreg/transport.hpp"

namespace bernreg::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Parses JSON text; syntax errors become InputError naming `source` and the byte offset.
Json parse_json(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);
/// Writes `doc` indented by two spaces plus a trailing newline.
void write_json_file(const std::string& path, const Json& doc);
void write_text_file(const std::string& path, const std::string& text);

Json to_json(const Hyperparameters& hyper);
Json to_json(const McmcConfig& mcmc);
Json to_json(const FitConfig& config);

/// Overlays the keys present in `doc` onto `config`. Unknown keys and
/// mistyped values raise InputError.
void apply_json(const Json& doc, Hyperparameters& hyper);
void apply_json(const Json& doc, McmcConfig& mcmc);

struct ChainFile {
  PosteriorChain chain;
  std::optional<std::size_t> process;
  Hyperparameters hyper;
  int iterations = 0;
};

/// {"metadata": {seed, iterations, burn_in, thinning, process, hyper, ...},
///  "draws": [{"k", "weights", "alpha"}, ...]}
Json chain_to_json(const PosteriorChain& chain, const Hyperparameters& hyper,
                   std::optional<std::size_t> process, const Json& config_echo);
/// Throws InputError for a document that does not describe a valid chain.
ChainFile chain_from_json(const Json& doc, const std::string& source);
ChainFile read_chain_file(const std::string& path);

Json curve_to_json(const MonotoneMap& curve);
Json band_to_json(const CurveBand& band);
Json registration_to_json(const RegistrationResult& result);

/// Rows "t,value".
std::string curve_csv(const MonotoneMap& curve);
/// Rows "t,value,lower,upper" with value the posterior mean.
std::string band_csv(const CurveBand& band);

/// JSON: an array of arrays of locations. CSV: header `process_id,location`
/// with integer ids 0..n-1 (an id with no rows is an empty process).
std::vector<PointPattern> parse_patterns_json(const Json& doc, const std::string& source);
std::vector<PointPattern> parse_patterns_csv(std::istream& in, const std::string& source);
/// Dispatches on the extension (.json or .csv).
std::vector<PointPattern> read_patterns(const std::string& path);
Json patterns_to_json(const std::vector<PointPattern>& patterns);

/// Deterministic report (no timing); timing goes to a separate document.
Json report_to_json(const MonteCarloReport& report, const Json& config_echo);
Json timing_to_json(const MonteCarloReport& report);
/// Rows "run,process,distance".
std::string boxplot_csv(const MonteCarloReport& report);

Json peak_set_to_json(const PeakSet& peaks);
/// Rows "year,spi_below,spi_above,spi_global,lower,upper".
std::string spi_csv(const std::vector<YearScore>& scores);

}  // namespace bernreg::io
