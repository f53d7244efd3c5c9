#pragma once

// Annual peaks over / below threshold from a daily temperature series, support
// rescaling, and scores of peak irregularity (L1 deviation of a warp from the
// identity).

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "bernreg/errors.hpp"
#include "bernreg/monotone_map.hpp"
#include "bernreg/pipeline.hpp"
#include "bernreg/point_pattern.hpp"
#include "bernreg/transport.hpp"

namespace bernreg {

struct DailyRecord {
  std::chrono::sys_days date;
  double value = 0.0;
};

class DailySeries {
 public:
  DailySeries() = default;
  /// Throws InputError unless dates are strictly increasing.
  explicit DailySeries(std::vector<DailyRecord> records);

  std::span<const DailyRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::vector<DailyRecord> records_;
};

/// Parses "YYYY-MM-DD". Throws InputError.
std::chrono::sys_days parse_iso_date(const std::string& text);
std::string format_iso_date(std::chrono::sys_days day);

/// CSV with header `date,value` (extra columns ignored, order free).
DailySeries read_daily_csv(std::istream& in);
DailySeries read_daily_csv(const std::string& path);

enum class PeakDirection { kAbove, kBelow };
std::string to_string(PeakDirection direction);

/// Climate years start on (start_month, start_day) and are labelled by the
/// calendar year in which they start. The default April 1 start matches an
/// April-to-March record.
struct YearRule {
  unsigned start_month = 4;
  unsigned start_day = 1;

  int label(std::chrono::sys_days day) const;
};

struct PeakOptions {
  YearRule rule;
  std::size_t min_records = 30;
};

struct YearPeaks {
  int year = 0;
  std::size_t records = 0;
  double threshold = 0.0;
  bool degenerate = false;  // every record qualified
  std::vector<std::chrono::sys_days> dates;
  PointPattern points;      // positions in the current support window
};

struct PeakSet {
  PeakDirection direction = PeakDirection::kAbove;
  double level = 0.95;
  std::vector<YearPeaks> years;
  // Raw day fraction of a position t: window_min + t * (window_max - window_min).
  double window_min = 0.0;
  double window_max = 1.0;

  double to_raw(double t) const { return window_min + t * (window_max - window_min); }
  std::vector<PointPattern> patterns() const;
};

/// Raised when some years have fewer records than the floor; lists them all.
class InsufficientDataError : public InputError {
 public:
  InsufficientDataError(std::vector<int> years, std::size_t floor);
  const std::vector<int>& years() const noexcept { return years_; }

 private:
  std::vector<int> years_;
};

/// Per climate year: threshold = type-7 quantile of that year's values at
/// `level`; peaks are days with value >= threshold (above) or <= threshold
/// (below), positioned as (date - first date) / (last date - first date).
PeakSet extract_peaks(const DailySeries& series, double level, PeakDirection direction,
                      const PeakOptions& options = {});

/// Affine map of all years' positions sending the pooled minimum to 0 and the
/// pooled maximum to 1. Throws InputError if the pooled pattern is empty or a point.
PeakSet rescale_support(const PeakSet& peaks);

/// Integral of |T(t) - t| over [0,1] by the trapezoid rule on the warp grid.
double spi(const MonotoneMap& warp);
double spi_global(double spi_above, double spi_below);

struct YearScore {
  int year = 0;
  std::size_t count_above = 0;
  std::size_t count_below = 0;
  double spi_above = 0.0;  // posterior means of the per-draw scores
  double spi_below = 0.0;
  double spi_global = 0.0;
  double lower = 0.0;  // band of the per-draw global score
  double upper = 0.0;
  double above_lower = 0.0, above_upper = 0.0;
  double below_lower = 0.0, below_upper = 0.0;
};

struct PeaksAnalysis {
  PeakSet above;  // rescaled
  PeakSet below;
  RegistrationResult registration_above;
  RegistrationResult registration_below;
  std::vector<YearScore> scores;
};

/// Full application pipeline: extract and rescale peaks in both directions,
/// fit every year, register, and score each year's warp per posterior draw.
/// Above-threshold chains use master seed derive_seed(seed, 1), below uses derive_seed(seed, 2).
PeaksAnalysis analyze_peaks(const DailySeries& series, double level_above, double level_below,
                            const FitConfig& config, const PeakOptions& options = {});

/// Synthetic daily series: a cosine annual cycle peaking mid-January (with a
/// per-year phase shift in days), Gaussian noise, rounded to whole degrees.
struct SyntheticClimate {
  int first_year = 2000;
  std::vector<double> shifts_days = {0.0, 3.0, -4.0, 2.0, 24.0, -2.0, 4.0, -3.0};
  double mean = 60.0;
  double amplitude = 15.0;
  double noise_sd = 2.5;
  bool round_values = true;
  std::uint64_t seed = 7;
};

DailySeries make_synthetic_daily_series(const SyntheticClimate& climate);

}  // namespace bernreg
