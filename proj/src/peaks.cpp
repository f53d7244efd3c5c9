#include "bernreg/peaks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "bernreg/random.hpp"

namespace bernreg {

namespace {

using std::chrono::sys_days;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Type-7 quantile; h is snapped to an integer when it is one up to rounding,
// so that mirrored levels p and 1 - p select mirrored order statistics.
double type7_quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  double h = (static_cast<double>(values.size()) - 1.0) * level;
  if (std::abs(h - std::round(h)) < 1e-9) h = std::round(h);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

DailySeries::DailySeries(std::vector<DailyRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 1; i < records_.size(); ++i) {
    if (records_[i].date <= records_[i - 1].date) {
      throw InputError("dates must be strictly increasing (record " + std::to_string(i + 1) +
                       ", " + format_iso_date(records_[i].date) + ")");
    }
  }
  for (const auto& r : records_) {
    if (!std::isfinite(r.value)) {
      throw InputError("non-finite value on " + format_iso_date(r.date));
    }
  }
}

sys_days parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  auto r1 = std::from_chars(p, end, y);
  if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != '-') {
    throw InputError("bad date '" + text + "', expected YYYY-MM-DD");
  }
  auto r2 = std::from_chars(r1.ptr + 1, end, m);
  if (r2.ec != std::errc{} || r2.ptr == end || *r2.ptr != '-') {
    throw InputError("bad date '" + text + "', expected YYYY-MM-DD");
  }
  auto r3 = std::from_chars(r2.ptr + 1, end, d);
  if (r3.ec != std::errc{} || r3.ptr != end) {
    throw InputError("bad date '" + text + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + text + "'");
  return sys_days{ymd};
}

std::string format_iso_date(sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

DailySeries read_daily_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("daily CSV is empty");
  const auto header = split_csv_line(line);
  const auto find = [&](const char* name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(std::string("daily CSV is missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = find("date");
  const std::size_t value_col = find("value");

  std::vector<DailyRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() <= std::max(date_col, value_col)) {
      throw InputError("line " + std::to_string(line_no) + ": too few fields");
    }
    DailyRecord rec;
    try {
      rec.date = parse_iso_date(fields[date_col]);
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string& v = fields[value_col];
    const auto res = std::from_chars(v.data(), v.data() + v.size(), rec.value);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      throw InputError("line " + std::to_string(line_no) + ": bad value '" + v + "'");
    }
    records.push_back(rec);
  }
  return DailySeries(std::move(records));
}

DailySeries read_daily_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_daily_csv(in);
}

std::string to_string(PeakDirection direction) {
  return direction == PeakDirection::kAbove ? "above" : "below";
}

int YearRule::label(sys_days day) const {
  const std::chrono::year_month_day ymd{day};
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  const unsigned d = static_cast<unsigned>(ymd.day());
  const bool started = m > start_month || (m == start_month && d >= start_day);
  return started ? y : y - 1;
}

std::vector<PointPattern> PeakSet::patterns() const {
  std::vector<PointPattern> out;
  out.reserve(years.size());
  for (const auto& y : years) out.push_back(y.points);
  return out;
}

InsufficientDataError::InsufficientDataError(std::vector<int> years, std::size_t floor)
    : InputError([&] {
        std::string msg = "years with fewer than " + std::to_string(floor) + " records:";
        for (int y : years) msg += " " + std::to_string(y);
        return msg;
      }()),
      years_(std::move(years)) {}

PeakSet extract_peaks(const DailySeries& series, double level, PeakDirection direction,
                      const PeakOptions& options) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("quantile level must lie in (0,1)");
  if (series.size() == 0) throw InputError("daily series is empty");

  std::map<int, std::vector<DailyRecord>> by_year;
  for (const auto& r : series.records()) by_year[options.rule.label(r.date)].push_back(r);

  std::vector<int> short_years;
  for (const auto& [year, recs] : by_year) {
    if (recs.size() < std::max<std::size_t>(options.min_records, 2)) short_years.push_back(year);
  }
  if (!short_years.empty()) throw InsufficientDataError(short_years, options.min_records);

  PeakSet out;
  out.direction = direction;
  out.level = level;
  for (const auto& [year, recs] : by_year) {
    std::vector<double> values;
    values.reserve(recs.size());
    for (const auto& r : recs) values.push_back(r.value);

    YearPeaks yp;
    yp.year = year;
    yp.records = recs.size();
    yp.threshold = type7_quantile(values, level);
    const double span = static_cast<double>((recs.back().date - recs.front().date).count());
    std::vector<double> positions;
    for (const auto& r : recs) {
      const bool hit = direction == PeakDirection::kAbove ? r.value >= yp.threshold
                                                          : r.value <= yp.threshold;
      if (!hit) continue;
      yp.dates.push_back(r.date);
      positions.push_back(static_cast<double>((r.date - recs.front().date).count()) / span);
    }
    yp.degenerate = positions.size() == recs.size();
    yp.points = PointPattern(std::move(positions));
    out.years.push_back(std::move(yp));
  }
  return out;
}

PeakSet rescale_support(const PeakSet& peaks) {
  double lo = 1.0, hi = 0.0;
  bool any = false;
  for (const auto& y : peaks.years) {
    if (y.points.empty()) continue;
    any = true;
    lo = std::min(lo, y.points.points().front());
    hi = std::max(hi, y.points.points().back());
  }
  if (!any) throw InputError("cannot rescale an empty pooled pattern");
  if (!(hi > lo)) throw InputError("pooled peaks occupy a single position; window is degenerate");

  PeakSet out = peaks;
  const double width = hi - lo;
  for (auto& y : out.years) {
    std::vector<double> moved;
    moved.reserve(y.points.count());
    for (double t : y.points.points()) moved.push_back(std::clamp((t - lo) / width, 0.0, 1.0));
    y.points = PointPattern(std::move(moved));
  }
  out.window_min = peaks.to_raw(lo);
  out.window_max = peaks.to_raw(hi);
  return out;
}

double spi(const MonotoneMap& warp) {
  const std::size_t n = warp.intervals();
  const double h = 1.0 / static_cast<double>(n);
  double total = 0.0;
  double previous = std::abs(warp[0]);
  for (std::size_t g = 1; g <= n; ++g) {
    const double current = std::abs(warp[g] - warp.knot(g));
    total += 0.5 * h * (previous + current);
    previous = current;
  }
  return total;
}

double spi_global(double spi_above, double spi_below) {
  if (spi_above < 0.0 || spi_below < 0.0) throw InputError("peak scores must be nonnegative");
  return 0.5 * (spi_above + spi_below);
}

PeaksAnalysis analyze_peaks(const DailySeries& series, double level_above, double level_below,
                            const FitConfig& config, const PeakOptions& options) {
  config.validate();
  PeaksAnalysis out;
  out.above = rescale_support(extract_peaks(series, level_above, PeakDirection::kAbove, options));
  out.below = rescale_support(extract_peaks(series, level_below, PeakDirection::kBelow, options));

  const std::size_t years = out.above.years.size();
  std::vector<std::vector<double>> above_draws(years), below_draws(years);

  auto run = [&](const PeakSet& peaks, std::uint64_t stream,
                 std::vector<std::vector<double>>& draws) {
    FitConfig c = config;
    c.mcmc.seed = derive_seed(config.mcmc.seed, stream);
    const auto patterns = peaks.patterns();
    const auto chains = fit_processes(patterns, c);
    SummaryOptions summary = c.summary_options();
    summary.on_warp_draw = [&](std::size_t i, std::size_t, const MonotoneMap& warp) {
      draws[i].push_back(spi(warp));
    };
    return posterior_summaries(chains, patterns, summary);
  };
  out.registration_above = run(out.above, 1, above_draws);
  out.registration_below = run(out.below, 2, below_draws);

  const double p_lo = 0.5 * (1.0 - config.band_level);
  const double p_hi = 0.5 * (1.0 + config.band_level);
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto band_of = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::pair{sorted_quantile(v, p_lo), sorted_quantile(v, p_hi)};
  };
  for (std::size_t i = 0; i < years; ++i) {
    YearScore s;
    s.year = out.above.years[i].year;
    s.count_above = out.above.years[i].points.count();
    s.count_below = out.below.years[i].points.count();
    s.spi_above = mean_of(above_draws[i]);
    s.spi_below = mean_of(below_draws[i]);
    s.spi_global = spi_global(s.spi_above, s.spi_below);
    std::vector<double> global(above_draws[i].size());
    for (std::size_t j = 0; j < global.size(); ++j) {
      global[j] = spi_global(above_draws[i][j], below_draws[i][j]);
    }
    std::tie(s.lower, s.upper) = band_of(global);
    std::tie(s.above_lower, s.above_upper) = band_of(above_draws[i]);
    std::tie(s.below_lower, s.below_upper) = band_of(below_draws[i]);
    out.scores.push_back(s);
  }
  return out;
}

DailySeries make_synthetic_daily_series(const SyntheticClimate& climate) {
  using namespace std::chrono;
  Rng rng(climate.seed);
  std::normal_distribution<double> noise(0.0, climate.noise_sd);
  // Days from April 1 to January 15 of the following calendar year.
  constexpr double kWarmPeakDay = 289.0;
  std::vector<DailyRecord> records;
  for (std::size_t y = 0; y < climate.shifts_days.size(); ++y) {
    const int year = climate.first_year + static_cast<int>(y);
    const sys_days start{std::chrono::year{year} / April / 1};
    const sys_days stop{std::chrono::year{year + 1} / April / 1};
    for (sys_days d = start; d < stop; d += days{1}) {
      const double offset = static_cast<double>((d - start).count());
      const double phase =
          2.0 * std::numbers::pi * (offset - kWarmPeakDay - climate.shifts_days[y]) / 365.25;
      double value = climate.mean + climate.amplitude * std::cos(phase) + noise(rng);
      if (climate.round_values) value = std::round(value);
      records.push_back({d, value});
    }
  }
  return DailySeries(std::move(records));
}

}  // namespace bernreg
