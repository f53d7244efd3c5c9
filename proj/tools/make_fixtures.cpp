// Regenerates the packaged test fixtures:
//   synthetic_daily.csv  daily series with injected per-year phase shifts
//   small_n_patterns.json  one seeded small_n dataset (warped patterns)

#include <filesystem>
#include <iostream>
#include <string>

#include "bernreg/io.hpp"
#include "bernreg/peaks.hpp"
#include "bernreg/simulate.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("tests/data");
  try {
    fs::create_directories(dir);
    const auto series = bernreg::make_synthetic_daily_series({});
    std::string csv = "date,value\n";
    for (const auto& r : series.records()) {
      csv += bernreg::format_iso_date(r.date) + "," + bernreg::io::format_double(r.value) + "\n";
    }
    bernreg::io::write_text_file((dir / "synthetic_daily.csv").string(), csv);

    const auto ds = bernreg::gen_small_n(2024);
    bernreg::io::write_json_file((dir / "small_n_patterns.json").string(),
                                 bernreg::io::patterns_to_json(ds.warped));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
