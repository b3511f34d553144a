#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"

using namespace epihaz;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EPIHAZ_CLI_PATH) + " " + args + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("epihaz_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("cli usage and data errors map to exit codes") {
  REQUIRE(run_cli("definitely-not-a-subcommand") == 1);
  REQUIRE(run_cli("estimate") == 1);  // missing required --input
  TempDir dir("missing");
  REQUIRE(run_cli("estimate --input " + dir.str() + "/nope.csv --out " + dir.str()) == 2);
}

TEST_CASE("cli simulate round-trips through the file format bit-for-bit") {
  TempDir dir("sim");
  const std::string flags =
      "simulate --mode network --n 600 --ws-k 8 --ws-p .1 --contact weibull:2,1 "
      "--stop-m 60 --seed 7 --out ";
  REQUIRE(run_cli(flags + dir.str()) == 0);
  REQUIRE(fs::exists(dir.path / "record.csv"));
  REQUIRE(fs::exists(dir.path / "edges.csv"));
  REQUIRE(fs::exists(dir.path / "manifest.txt"));

  // The same seed in another directory is byte-identical.
  TempDir dir2("sim2");
  REQUIRE(run_cli(flags + dir2.str()) == 0);
  REQUIRE(slurp(dir.path / "record.csv") == slurp(dir2.path / "record.csv"));
  REQUIRE(slurp(dir.path / "edges.csv") == slurp(dir2.path / "edges.csv"));

  // The written record equals the in-memory pipeline.
  SimulationConfig cfg;
  cfg.mode = ContactMode::Network;
  cfg.n = 600;
  cfg.ws_k = 8;
  cfg.ws_p = 0.1;
  cfg.contact = HazardModel::weibull(2.0, 1.0);
  cfg.stop_m = 60;
  cfg.seed = 7;
  auto rec = simulate_epidemic(cfg);
  REQUIRE(record_to_csv(rec) == slurp(dir.path / "record.csv"));

  // Reading back and estimating matches the in-memory estimate bit-for-bit.
  auto reread = read_record_files(dir.path / "record.csv", dir.path / "edges.csv");
  auto est_file = nelson_aalen(reread);
  auto est_mem = nelson_aalen(rec);
  REQUIRE(estimate_to_csv(est_file) == estimate_to_csv(est_mem));
}

TEST_CASE("cli estimate emits the marginal outputs") {
  TempDir dir("est");
  REQUIRE(run_cli("simulate --mode network --n 600 --ws-k 8 --ws-p .1 --contact weibull:2,1 "
                  "--stop-m 60 --seed 11 --out " +
                  dir.str()) == 0);
  REQUIRE(run_cli("estimate --input " + dir.str() + "/record.csv --edges " + dir.str() +
                  "/edges.csv --method marginal-na --mask-infectors --tol .002 --out " +
                  dir.str()) == 0);
  REQUIRE(fs::exists(dir.path / "estimate.csv"));
  REQUIRE(fs::exists(dir.path / "weights.csv"));
  REQUIRE(fs::exists(dir.path / "emlog.csv"));
  REQUIRE(fs::exists(dir.path / "hazard.csv"));

  // Weights parse back and are normalized per infectee.
  const auto lines = read_lines(dir.path / "weights.csv");
  REQUIRE(lines.size() > 2);
  std::map<long, double> totals;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto f = split_csv_line(lines[li]);
    REQUIRE(f.size() == 4);
    totals[parse_long(trim(f[0]))] += parse_double(trim(f[3]));
  }
  for (const auto& [j, total] : totals) REQUIRE(total == Catch::Approx(1.0).margin(1e-9));

  // Repeat run is byte-identical (the pipeline is seedless given the record).
  TempDir dir2("est2");
  REQUIRE(run_cli("estimate --input " + dir.str() + "/record.csv --edges " + dir.str() +
                  "/edges.csv --method marginal-na --mask-infectors --tol .002 --out " +
                  dir2.str()) == 0);
  REQUIRE(slurp(dir.path / "estimate.csv") == slurp(dir2.path / "estimate.csv"));
}

TEST_CASE("cli household pipeline and sar simulation") {
  TempDir dir("hh");
  REQUIRE(run_cli("gen-households --seed 5 --output " + dir.str() + "/households.csv") == 0);
  REQUIRE(run_cli("household-analyze --input " + dir.str() + "/households.csv --out " + dir.str()) ==
          0);
  REQUIRE(fs::exists(dir.path / "estimate.csv"));
  REQUIRE(fs::exists(dir.path / "survival.csv"));
  REQUIRE(fs::exists(dir.path / "models.csv"));
  REQUIRE(fs::exists(dir.path / "summary.txt"));
  const auto summary = slurp(dir.path / "summary.txt");
  REQUIRE(summary.find("household infectious contact probability") != std::string::npos);

  REQUIRE(run_cli("sar-sim --input " + dir.str() + "/households.csv --p .07 --replicates 500 "
                  "--seed 3 --out " +
                  dir.str()) == 0);
  const auto sar = read_lines(dir.path / "sar.csv");
  REQUIRE(sar.size() >= 2);
  const auto f = split_csv_line(sar[1]);
  const double mean = parse_double(trim(f[0]));
  REQUIRE(mean > 0.0);
  REQUIRE(mean < 1.0);
}

TEST_CASE("cli ws-stats runs") {
  REQUIRE(run_cli("ws-stats --n 2000 --k 10 --p .1 --seed 2 > /dev/null") == 0);
}
