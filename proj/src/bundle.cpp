#include "mobstat/bundle.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "mobstat/date.hpp"
#include "mobstat/errors.hpp"

namespace mobstat::bundle {

using nlohmann::json;

Bundle build_bundle(std::span<const ingest::DailyCbgRecord> mobility,
                    std::span<const ingest::CbgDemographics> demographics) {
  std::set<std::string> ids;
  for (const auto& d : demographics) ids.insert(d.cbg_id);
  for (const auto& r : mobility) ids.insert(r.cbg_id);
  if (ids.empty()) throw DataError("cannot export a dashboard bundle for an empty CBG set");

  Bundle b;

  b.cbgs = {{"schema_version", kSchemaVersion}, {"cbgs", json::object()}};
  for (const auto& d : demographics) {
    json race = json::object();
    for (std::size_t k = 0; k < d.race_fractions.size(); ++k) race[ingest::kRaceNames[k]] = d.race_fractions[k];
    b.cbgs["cbgs"][d.cbg_id] = {{"race", race},
                                {"older50", d.older50_fraction},
                                {"median_income", d.median_income},
                                {"population", d.population}};
  }
  for (const auto& id : ids) {
    if (!b.cbgs["cbgs"].contains(id)) b.cbgs["cbgs"][id] = nullptr;
  }

  std::set<Date> day_set;
  for (const auto& r : mobility) day_set.insert(r.date);
  const std::vector<Date> days(day_set.begin(), day_set.end());
  std::map<Date, std::size_t> day_index;
  for (std::size_t i = 0; i < days.size(); ++i) day_index[days[i]] = i;

  std::map<std::string, std::vector<const ingest::DailyCbgRecord*>> by_origin;
  for (const auto& r : mobility) by_origin[r.cbg_id].push_back(&r);

  b.flows = {{"schema_version", kSchemaVersion}, {"origins", json::object()}};
  std::map<std::string, std::vector<std::int64_t>> incoming;
  std::map<std::string, std::vector<std::int64_t>> self_loops;
  auto series_for = [&](std::map<std::string, std::vector<std::int64_t>>& m, const std::string& id) -> auto& {
    auto& v = m[id];
    if (v.empty()) v.assign(days.size(), 0);
    return v;
  };
  for (auto& [origin, recs] : by_origin) {
    std::sort(recs.begin(), recs.end(), [](auto* a, auto* c) { return a->date < c->date; });
    json entries = json::array();
    for (const auto* r : recs) {
      json dests = json::array();
      for (const auto& [dest, visits] : r->destination_flows) {
        const bool self = dest == origin;
        dests.push_back({{"cbg", dest}, {"visits", visits}, {"self_loop", self}});
        const auto di = day_index.at(r->date);
        series_for(incoming, dest)[di] += visits;
        if (self) series_for(self_loops, dest)[di] += visits;
      }
      entries.push_back({{"date", format_date(r->date)}, {"destinations", std::move(dests)}});
    }
    b.flows["origins"][origin] = std::move(entries);
  }

  json dates = json::array();
  for (const auto d : days) dates.push_back(format_date(d));
  b.timeseries = {{"schema_version", kSchemaVersion}, {"dates", dates}, {"cbgs", json::object()}};
  for (const auto& id : ids) {
    json stay(days.size(), nullptr);
    json completely(days.size(), nullptr);
    json in = json::array();
    json loops = json::array();
    if (auto it = by_origin.find(id); it != by_origin.end()) {
      for (const auto* r : it->second) {
        const auto di = day_index.at(r->date);
        stay[di] = r->median_pct_time_home;
        if (r->device_count > 0) {
          completely[di] = static_cast<double>(r->completely_home_count) / static_cast<double>(r->device_count);
        }
      }
    }
    const auto in_it = incoming.find(id);
    const auto loop_it = self_loops.find(id);
    for (std::size_t i = 0; i < days.size(); ++i) {
      in.push_back(in_it == incoming.end() ? 0 : in_it->second[i]);
      loops.push_back(loop_it == self_loops.end() ? 0 : loop_it->second[i]);
    }
    b.timeseries["cbgs"][id] = {{"stay_home_fraction", std::move(stay)},
                                {"completely_home_fraction", std::move(completely)},
                                {"incoming_visits", std::move(in)},
                                {"self_loop_visits", std::move(loops)}};
  }
  return b;
}

void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory {}: {}", out_dir.string(), ec.message()));
  ingest::write_file(out_dir / "cbgs.json", bundle.cbgs.dump(2) + "\n");
  ingest::write_file(out_dir / "flows.json", bundle.flows.dump(2) + "\n");
  ingest::write_file(out_dir / "timeseries.json", bundle.timeseries.dump(2) + "\n");
}

void export_dashboard_bundle(std::span<const ingest::DailyCbgRecord> mobility,
                             std::span<const ingest::CbgDemographics> demographics,
                             const std::filesystem::path& out_dir) {
  write_bundle(build_bundle(mobility, demographics), out_dir);
}

}  // namespace mobstat::bundle
