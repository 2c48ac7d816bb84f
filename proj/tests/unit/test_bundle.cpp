#include <doctest.h>

#include "mobstat/bundle.hpp"
#include "mobstat/errors.hpp"

using namespace mobstat;
using namespace mobstat::bundle;

namespace {

const Date kStart = parse_date("2020-04-01");

std::vector<ingest::DailyCbgRecord> two_cbgs_one_week() {
  std::vector<ingest::DailyCbgRecord> out;
  for (int d = 0; d < 7; ++d) {
    ingest::DailyCbgRecord a;
    a.cbg_id = "420030001001";
    a.date = add_days(kStart, d);
    a.device_count = 100;
    a.completely_home_count = 20 + d;
    a.median_pct_time_home = 0.6;
    a.destination_flows = {{"420030001002", 5 + d}};
    ingest::DailyCbgRecord b = a;
    b.cbg_id = "420030001002";
    b.completely_home_count = 40;
    b.destination_flows = {{"420030001002", 9}};
    out.push_back(a);
    out.push_back(b);
  }
  return out;
}

std::vector<ingest::CbgDemographics> demographics() {
  ingest::CbgDemographics d;
  d.cbg_id = "420030001001";
  d.race_fractions = {0.6, 0.2, 0.1, 0.05, 0.05};
  d.older50_fraction = 0.3;
  d.median_income = 51000;
  d.population = 1200;
  return {d};
}

}  // namespace

TEST_CASE("flows carry one dated entry per origin day") {
  const auto b = build_bundle(two_cbgs_one_week(), demographics());
  CHECK(b.flows["schema_version"] == kSchemaVersion);
  const auto& origin = b.flows["origins"]["420030001001"];
  REQUIRE(origin.size() == 7);
  CHECK(origin[0]["date"] == "2020-04-01");
  CHECK(origin[6]["destinations"][0]["visits"] == 11);
  CHECK(origin[0]["destinations"][0]["self_loop"] == false);
}

TEST_CASE("self loops are preserved and flagged") {
  const auto b = build_bundle(two_cbgs_one_week(), demographics());
  const auto& entry = b.flows["origins"]["420030001002"][0]["destinations"][0];
  CHECK(entry["cbg"] == "420030001002");
  CHECK(entry["self_loop"] == true);
  CHECK(entry["visits"] == 9);
  const auto& ts = b.timeseries["cbgs"]["420030001002"];
  CHECK(ts["self_loop_visits"][0] == 9);
  // Incoming counts both the self loop and visits from the neighbour.
  CHECK(ts["incoming_visits"][0] == 9 + 5);
}

TEST_CASE("timeseries and demographics") {
  auto records = two_cbgs_one_week();
  records.erase(records.begin() + 3);  // second CBG, day 1
  const auto b = build_bundle(records, demographics());
  CHECK(b.timeseries["dates"].size() == 7);
  const auto& first = b.timeseries["cbgs"]["420030001001"];
  CHECK(first["completely_home_fraction"][2] == doctest::Approx(0.22));
  CHECK(first["stay_home_fraction"][0] == doctest::Approx(0.6));
  CHECK(b.timeseries["cbgs"]["420030001002"]["stay_home_fraction"][1].is_null());
  const auto& demo = b.cbgs["cbgs"]["420030001001"];
  CHECK(demo["race"]["white"] == doctest::Approx(0.6));
  CHECK(demo["older50"] == doctest::Approx(0.3));
  CHECK(demo["population"] == 1200);
  CHECK(b.cbgs["cbgs"]["420030001002"].is_null());
}

TEST_CASE("empty CBG set is an error") {
  CHECK_THROWS_AS(build_bundle({}, {}), DataError);
}

TEST_CASE("re-export is byte identical") {
  const auto dir = std::filesystem::temp_directory_path() / "mobstat_bundle_test";
  std::filesystem::remove_all(dir);
  export_dashboard_bundle(two_cbgs_one_week(), demographics(), dir / "a");
  export_dashboard_bundle(two_cbgs_one_week(), demographics(), dir / "b");
  for (const char* name : {"cbgs.json", "flows.json", "timeseries.json"}) {
    const auto a = ingest::read_file(dir / "a" / name);
    CHECK(!a.empty());
    CHECK(a == ingest::read_file(dir / "b" / name));
    CHECK(nlohmann::json::parse(a).is_object());
  }
  std::filesystem::remove_all(dir);
}
