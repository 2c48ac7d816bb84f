#include <cstdlib>
#include <sstream>

#include <doctest.h>

#include "mobstat/cli.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/granger.hpp"
#include "mobstat/ingest.hpp"

using namespace mobstat;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run_command(args, out, err);
  return {status, out.str(), err.str()};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("full pipeline on synthetic data") {
  TempDir dir("mobstat_cli_pipeline");
  const auto out = dir.path.string();
  REQUIRE(run({"synth", "--seed", "7", "--cbgs", "30", "--out-dir", out}).status == 0);

  const auto ingest = run({"ingest", "--mobility", dir / "mobility.csv", "--fatalities", dir / "fatalities.csv",
                           "--out-dir", out});
  REQUIRE(ingest.status == 0);
  CHECK(ingest.out.find("104 weeks") != std::string::npos);

  const auto g = run({"granger", "--weekly", dir / "weekly.csv", "--max-lag", "6", "--direction", "both",
                      "--out-dir", out});
  REQUIRE(g.status == 0);
  CHECK(count(g.out, "Granger causality:") == 2);
  CHECK(count(g.out, "b_6") == 2);
  const auto scans = nlohmann::json::parse(ingest::read_file(dir / "granger.json"));
  REQUIRE(scans.size() == 2);
  CHECK(granger::scan_from_json(scans[0]).results.size() == 6);

  const auto f = run({"forecast", "--weekly", dir / "weekly.csv", "--holdout", "5", "--out-dir", out});
  REQUIRE(f.status == 0);
  CHECK(ingest::read_file(dir / "backtest.csv").find("week_start,actual,predicted") == 0);

  const auto b = run({"betareg", "--mobility", dir / "mobility.csv", "--demographics", dir / "demographics.csv",
                      "--pre", "2020-02-01:2020-02-29", "--post", "2020-04-01:2020-04-30", "--out-dir", out});
  REQUIRE(b.status == 0);
  CHECK(b.out.find("Hypothetical block") != std::string::npos);

  const auto d = run({"did", "--p1", "black", "--p2", "white", "--samples", "20000", "--out-dir", out});
  REQUIRE(d.status == 0);
  const auto did = nlohmann::json::parse(ingest::read_file(dir / "did.json"));
  CHECK(did["n_samples"] == 20000);
  CHECK(did["population1"] == "black");

  const auto e = run({"export-dashboard", "--mobility", dir / "mobility.csv", "--demographics",
                      dir / "demographics.csv", "--out-dir", dir / "bundle"});
  REQUIRE(e.status == 0);
  CHECK(std::filesystem::exists(dir.path / "bundle" / "timeseries.json"));
}

TEST_CASE("synth is deterministic") {
  TempDir dir("mobstat_cli_synth");
  REQUIRE(run({"synth", "--seed", "7", "--cbgs", "5", "--days", "70", "--out-dir", dir / "a"}).status == 0);
  REQUIRE(run({"synth", "--seed", "7", "--cbgs", "5", "--days", "70", "--out-dir", dir / "b"}).status == 0);
  for (const char* f : {"mobility.csv", "fatalities.csv", "demographics.csv"}) {
    CHECK(ingest::read_file(dir.path / "a" / f) == ingest::read_file(dir.path / "b" / f));
  }
}

TEST_CASE("kpss on a constant column fails with a diagnostic") {
  TempDir dir("mobstat_cli_kpss");
  ingest::write_file(dir.path / "c.csv", "v\n3\n3\n3\n3\n3\n3\n3\n3\n3\n3\n");
  const auto r = run({"kpss", "--input", dir / "c.csv", "--column", "v", "--out-dir", dir.path.string()});
  CHECK(r.status == static_cast<int>(ErrorKind::numerical));
  CHECK(r.err.find("zero variance") != std::string::npos);
  const auto missing = run({"kpss", "--input", dir / "c.csv", "--column", "w"});
  CHECK(missing.status == static_cast<int>(ErrorKind::data));
  CHECK(missing.err.find("'w'") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({}).status == 1);
  CHECK(run({"frobnicate"}).status == 1);
  CHECK(run({"granger", "--bogus"}).status == 1);
  CHECK(run({"granger", "--weekly", "/nonexistent/weekly.csv"}).status == 2);
  CHECK(run({"synth", "--help"}).status == 0);
  const auto overlap = run({"betareg", "--mobility", "m.csv", "--demographics", "d.csv", "--pre",
                            "2020-02-01:2020-04-10", "--post", "2020-04-01:2020-04-30"});
  CHECK(overlap.status == 1);
  CHECK(overlap.err.find("overlaps") != std::string::npos);
}

TEST_CASE("run config validation") {
  cli::RunConfig c;
  c.pre_period = cli::parse_date_range("2020-02-01:2020-02-29");
  c.post_period = cli::parse_date_range("2020-03-01:2020-03-31");
  CHECK_NOTHROW(c.validate());
  c.post_period = cli::parse_date_range("2020-02-29:2020-03-31");
  CHECK_THROWS_AS(c.validate(), UsageError);
  CHECK_THROWS_AS(cli::parse_date_range("2020-02-01"), UsageError);
  CHECK_THROWS_AS(cli::parse_date_range("2020-03-01:2020-02-01"), UsageError);
}

TEST_CASE("output directory from the environment") {
  TempDir dir("mobstat_cli_env");
  ::setenv(cli::kOutputDirEnv, dir.path.c_str(), 1);
  CHECK(cli::resolve_output_dir("") == dir.path);
  CHECK(cli::resolve_output_dir("explicit") == "explicit");
  REQUIRE(run({"synth", "--cbgs", "2", "--days", "14"}).status == 0);
  ::unsetenv(cli::kOutputDirEnv);
  CHECK(std::filesystem::exists(dir.path / "mobility.csv"));
  CHECK(cli::resolve_output_dir("") == ".");
}

TEST_CASE("inputs are not modified") {
  TempDir dir("mobstat_cli_inputs");
  REQUIRE(run({"synth", "--cbgs", "4", "--days", "120", "--out-dir", dir.path.string()}).status == 0);
  const auto before = ingest::read_file(dir.path / "mobility.csv");
  REQUIRE(run({"ingest", "--mobility", dir / "mobility.csv", "--fatalities", dir / "fatalities.csv", "--out-dir",
               dir.path.string()})
              .status == 0);
  CHECK(ingest::read_file(dir.path / "mobility.csv") == before);
}
