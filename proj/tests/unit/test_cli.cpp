#include <catch_amalgamated.hpp>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bernreg/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "bernreg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = bernreg::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDirs {
  std::vector<fs::path> paths;
  ~TempDirs() {
    std::error_code ec;
    for (const auto& p : paths) fs::remove_all(p, ec);
  }
};

fs::path fresh_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  static TempDirs created;
  const fs::path dir = fs::temp_directory_path() /
                       ("bernreg_cli_" + std::to_string(::getpid()) + "_" + tag + "_" +
                        std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  created.paths.push_back(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

json error_of(const Result& r) {
  const auto doc = json::parse(r.err);
  REQUIRE(doc.contains("error"));
  return doc["error"];
}

// Every regular file under `dir`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& dir,
                                        const std::vector<std::string>& skip = {}) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).string();
    if (std::find(skip.begin(), skip.end(), rel) != skip.end()) continue;
    files[rel] = slurp(e.path());
  }
  return files;
}

const std::vector<std::string> kTiny = {"--k-max", "15", "--iterations", "60",
                                        "--burn-in", "20", "--thinning", "4"};

std::vector<std::string> with(std::vector<std::string> args,
                              const std::vector<std::string>& extra = kTiny) {
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

const std::string kPatterns = "[[0.1, 0.2, 0.25, 0.6], [0.3, 0.35, 0.8], [0.05, 0.5, 0.55, 0.9, 0.95]]";

}  // namespace

TEST_CASE("help and usage errors", "[cli]") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);

  const auto none = run({});
  CHECK(none.code == 2);
  CHECK(error_of(none)["kind"] == "input");

  const auto unknown = run({"fit", "--input", "x.json", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(error_of(unknown)["exit_code"] == 2);

  const auto levels = run({"peaks", "--csv", "x.csv", "--levels", "0.9"});
  CHECK(levels.code == 2);
}

TEST_CASE("fit writes one chain per process and is deterministic", "[cli]") {
  const auto dir = fresh_dir("fit");
  write(dir / "patterns.json", kPatterns);
  const auto a = run(with({"--out-dir", (dir / "a").string(), "--seed", "3", "fit", "--input",
                           (dir / "patterns.json").string()}));
  REQUIRE(a.code == 0);
  for (int i = 0; i < 3; ++i) {
    const auto path = dir / "a" / ("chain_00" + std::to_string(i) + ".json");
    REQUIRE(fs::exists(path));
    const auto chain = read_json(path);
    CHECK(chain["metadata"]["seed"].is_number_unsigned());
    CHECK(chain["draws"].size() == 10);
    CHECK(chain["metadata"]["process"] == i);
    for (const auto& d : chain["draws"]) {
      CHECK(d["weights"].size() == d["k"].get<std::size_t>());
      CHECK(d["alpha"].get<double>() > 0.0);
    }
  }
  CHECK(read_json(dir / "a" / "config.json")["fit"]["mcmc"]["seed"] == 3);

  const auto b = run(with({"--out-dir", (dir / "b").string(), "--seed", "3", "fit", "--input",
                           (dir / "patterns.json").string()}));
  REQUIRE(b.code == 0);
  CHECK(tree(dir / "a") == tree(dir / "b"));

  const auto c = run(with({"--out-dir", (dir / "c").string(), "--seed", "4", "fit", "--input",
                           (dir / "patterns.json").string()}));
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "a" / "chain_000.json") != slurp(dir / "c" / "chain_000.json"));
}

TEST_CASE("fit accepts CSV patterns", "[cli]") {
  const auto dir = fresh_dir("csv");
  write(dir / "p.csv", "process_id,location\n0,0.1\n0,0.4\n1,0.7\n1,0.2\n");
  const auto r = run(with({"--out-dir", dir.string(), "fit", "--input", (dir / "p.csv").string()}));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "chain_001.json"));
  CHECK_FALSE(fs::exists(dir / "chain_002.json"));
}

TEST_CASE("fit reports input errors with the process index", "[cli]") {
  const auto dir = fresh_dir("fit_err");
  write(dir / "empty.json", "[[0.1, 0.2], []]");
  const auto r = run(with({"--out-dir", dir.string(), "fit", "--input", (dir / "empty.json").string()}));
  CHECK(r.code == 2);
  const auto e = error_of(r);
  CHECK(e["kind"] == "input");
  CHECK(e["message"].get<std::string>().find("process 1") != std::string::npos);

  write(dir / "outside.json", "[[0.1, 1.5]]");
  CHECK(run(with({"--out-dir", dir.string(), "fit", "--input", (dir / "outside.json").string()})).code == 2);
  CHECK(run(with({"--out-dir", dir.string(), "fit", "--input", (dir / "missing.json").string()})).code == 2);
  CHECK(run({"--out-dir", dir.string(), "fit", "--input", (dir / "outside.json").string(),
             "--iterations", "10", "--burn-in", "10"})
            .code == 2);
}

TEST_CASE("register round trip", "[cli]") {
  const auto dir = fresh_dir("register");
  write(dir / "one.json", "[[0.2, 0.3, 0.35, 0.7, 0.71]]");
  REQUIRE(run(with({"--out-dir", (dir / "fit1").string(), "fit", "--input",
                    (dir / "one.json").string()}))
              .code == 0);
  const auto r = run({"--out-dir", (dir / "reg1").string(), "register", "--chains",
                      (dir / "fit1" / "chain_000.json").string(), "--observed",
                      (dir / "one.json").string(), "--curves"});
  REQUIRE(r.code == 0);
  const auto doc = read_json(dir / "reg1" / "registration.json");
  CHECK(doc["draws"] == 10);
  const auto& mean = doc["warps"][0]["mean"];
  REQUIRE(mean.size() == 513);
  for (std::size_t g = 0; g < mean.size(); ++g) {
    CHECK(std::abs(mean[g].get<double>() - static_cast<double>(g) / 512.0) <= 2.0 / 512.0);
  }
  const auto& reg = doc["registered"][0];
  const std::vector<double> observed = {0.2, 0.3, 0.35, 0.7, 0.71};
  for (std::size_t j = 0; j < observed.size(); ++j) {
    CHECK(std::abs(reg[j].get<double>() - observed[j]) <= 2.0 / 512.0);
    CHECK(doc["intervals"][0][j]["observed"] == observed[j]);
  }
  CHECK(doc["config"]["command"] == "register");
  CHECK(fs::exists(dir / "reg1" / "curves" / "frechet_mean.csv"));
  CHECK(slurp(dir / "reg1" / "curves" / "warp_000.csv").rfind("t,value,lower,upper\n", 0) == 0);

  const auto again = run({"--out-dir", (dir / "reg2").string(), "register", "--chains",
                          (dir / "fit1" / "chain_000.json").string(), "--observed",
                          (dir / "one.json").string(), "--curves"});
  REQUIRE(again.code == 0);
  CHECK(tree(dir / "reg1") == tree(dir / "reg2"));
}

TEST_CASE("register error paths", "[cli]") {
  const auto dir = fresh_dir("register_err");
  write(dir / "two.json", "[[0.2, 0.4], [0.5, 0.6, 0.9]]");
  REQUIRE(run(with({"--out-dir", (dir / "a").string(), "fit", "--input",
                    (dir / "two.json").string()}))
              .code == 0);
  REQUIRE(run({"--out-dir", (dir / "b").string(), "fit", "--input", (dir / "two.json").string(),
               "--k-max", "15", "--iterations", "60", "--burn-in", "20", "--thinning", "2"})
              .code == 0);

  const auto mismatch = run({"--out-dir", (dir / "r").string(), "register", "--chains",
                             (dir / "a" / "chain_000.json").string(),
                             (dir / "b" / "chain_001.json").string(), "--observed",
                             (dir / "two.json").string()});
  CHECK(mismatch.code == 3);
  CHECK(error_of(mismatch)["kind"] == "consistency");

  write(dir / "broken.json", "{\"metadata\": [1, 2");
  const auto malformed = run({"--out-dir", (dir / "r").string(), "register", "--chains",
                              (dir / "broken.json").string(), (dir / "a" / "chain_001.json").string(),
                              "--observed", (dir / "two.json").string()});
  CHECK(malformed.code == 2);
  CHECK(error_of(malformed)["message"].get<std::string>().find("byte") != std::string::npos);

  const auto count = run({"--out-dir", (dir / "r").string(), "register", "--chains",
                          (dir / "a" / "chain_000.json").string(), "--observed",
                          (dir / "two.json").string()});
  CHECK(count.code == 3);
}

TEST_CASE("simulate smoke run", "[cli]") {
  const auto dir = fresh_dir("simulate");
  const std::vector<std::string> args = {"simulate", "--scenario", "small_n", "--runs", "1",
                                         "--k-max", "15", "--iterations", "60", "--burn-in",
                                         "20", "--thinning", "4"};
  auto a_args = args;
  a_args.insert(a_args.begin(), {"--out-dir", (dir / "a").string(), "--seed", "8"});
  const auto a = run(a_args);
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("wdm ", 0) == 0);
  const auto report = read_json(dir / "a" / "report.json");
  CHECK(report["scenario"] == "small_n");
  REQUIRE(report["per_run"].size() == 1);
  const auto& d = report["per_run"][0]["distances"];
  REQUIRE(d.size() == 3);
  CHECK(report["wdm"].get<double>() ==
        Catch::Approx(d[0].get<double>() + d[1].get<double>() + d[2].get<double>()).margin(1e-15));
  CHECK(report["median_distance"].size() == 3);
  CHECK(slurp(dir / "a" / "boxplot.csv").rfind("run,process,distance\n", 0) == 0);
  CHECK(read_json(dir / "a" / "timing.json").contains("elapsed_seconds"));

  auto b_args = args;
  b_args.insert(b_args.begin(), {"--out-dir", (dir / "b").string(), "--seed", "8"});
  REQUIRE(run(b_args).code == 0);
  CHECK(tree(dir / "a", {"timing.json"}) == tree(dir / "b", {"timing.json"}));

  CHECK(run({"--out-dir", dir.string(), "simulate", "--scenario", "huge"}).code == 2);
  CHECK(run({"--out-dir", dir.string(), "simulate", "--runs", "0"}).code == 2);
}

TEST_CASE("peaks on the packaged series", "[cli]") {
  const auto dir = fresh_dir("peaks");
  const std::string csv = std::string(BERNREG_DATA_DIR) + "/synthetic_daily.csv";
  for (const auto& [tag, hi, lo] : {std::tuple{"95", "0.95", "0.05"},
                                    std::tuple{"975", "0.975", "0.025"}}) {
    const auto out = dir / tag;
    const auto r = run(with({"--out-dir", out.string(), "--grid", "128", "peaks", "--csv", csv,
                             "--levels", hi, lo}));
    REQUIRE(r.code == 0);
    CHECK(r.err.empty());
    const auto spi = slurp(out / "spi.csv");
    CHECK(spi.rfind("year,spi_below,spi_above,spi_global,lower,upper\n", 0) == 0);
    CHECK(std::count(spi.begin(), spi.end(), '\n') == 9);
    const auto peaks = read_json(out / "peaks.json");
    CHECK(peaks["above"]["years"].size() == 8);
    CHECK(peaks["below"]["years"].size() == 8);
    CHECK(peaks["above"]["level"] == std::stod(hi));
    CHECK(fs::exists(out / "registration_above.json"));
    CHECK(fs::exists(out / "curves" / "warp_below_2004.csv"));
  }
}

TEST_CASE("peaks error paths and warnings", "[cli]") {
  const auto dir = fresh_dir("peaks_err");
  write(dir / "nocol.csv", "date,temp\n2001-04-01,60\n");
  const auto missing = run(with({"--out-dir", dir.string(), "peaks", "--csv", (dir / "nocol.csv").string()}));
  CHECK(missing.code == 2);
  CHECK(error_of(missing)["message"].get<std::string>().find("value") != std::string::npos);

  std::string flat = "date,value\n";
  for (int d = 1; d <= 30; ++d) flat += "2001-04-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + ",50\n";
  for (int d = 1; d <= 31; ++d) flat += "2001-05-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + ",50\n";
  write(dir / "flat.csv", flat);
  const auto degenerate = run(with({"--out-dir", (dir / "flat").string(), "--grid", "64", "peaks",
                                    "--csv", (dir / "flat.csv").string()}));
  CHECK(degenerate.code == 0);
  CHECK(degenerate.err.find("degenerate_year") != std::string::npos);

  const auto short_year = run(with({"--out-dir", (dir / "short").string(), "peaks", "--csv",
                                    (dir / "flat.csv").string(), "--min-records", "100"}));
  CHECK(short_year.code == 2);
  CHECK(error_of(short_year)["message"].get<std::string>().find("2001") != std::string::npos);

  CHECK(run({"--out-dir", dir.string(), "peaks", "--csv", (dir / "flat.csv").string(), "--levels",
             "1.5", "0.05"})
            .code == 2);
}

TEST_CASE("config file precedence", "[cli]") {
  const auto dir = fresh_dir("config");
  write(dir / "p.json", "[[0.2, 0.4, 0.5]]");
  write(dir / "cfg.json",
        R"({"seed": 5, "grid": 256, "hyper": {"k_max": 12}, "mcmc": {"iterations": 80, "burn_in": 40, "thinning": 8}})");
  const auto r = run({"--config", (dir / "cfg.json").string(), "--seed", "9", "--out-dir",
                      (dir / "o").string(), "fit", "--input", (dir / "p.json").string(),
                      "--iterations", "120"});
  REQUIRE(r.code == 0);
  const auto cfg = read_json(dir / "o" / "config.json");
  CHECK(cfg["fit"]["mcmc"]["seed"] == 9);         // flag beats file
  CHECK(cfg["fit"]["mcmc"]["iterations"] == 120);  // flag beats file
  CHECK(cfg["fit"]["mcmc"]["burn_in"] == 40);      // file beats default
  CHECK(cfg["fit"]["hyper"]["k_max"] == 12);
  CHECK(cfg["fit"]["grid"] == 256);
  CHECK(cfg["fit"]["hyper"]["a0"] == 1.0);  // default
  CHECK(read_json(dir / "o" / "chain_000.json")["draws"].size() == 10);

  write(dir / "bad.json", R"({"mcmc": {"iters": 5}})");
  CHECK(run({"--config", (dir / "bad.json").string(), "--out-dir", dir.string(), "fit", "--input",
             (dir / "p.json").string()})
            .code == 2);
  write(dir / "wrong_type.json", R"({"seed": "five"})");
  CHECK(run({"--config", (dir / "wrong_type.json").string(), "--out-dir", dir.string(), "fit",
             "--input", (dir / "p.json").string()})
            .code == 2);
}
