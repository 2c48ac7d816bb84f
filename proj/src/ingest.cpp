#include "mobstat/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mobstat/csv.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/series.hpp"

namespace mobstat::ingest {

namespace {

bool is_cbg_id(std::string_view id) {
  return id.size() == 12 && std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::map<std::string, std::int64_t> parse_flows(const std::string& text) {
  std::map<std::string, std::int64_t> flows;
  if (text.empty()) return flows;
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError(fmt::format("destination_flows is not a JSON object: {}", text));
  }
  for (const auto& [key, value] : j.items()) {
    if (!is_cbg_id(key)) throw DataError(fmt::format("destination '{}' is not a 12-digit CBG id", key));
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
      throw DataError(fmt::format("visit count for destination {} must be a nonnegative integer", key));
    }
    flows.emplace(key, value.get<std::int64_t>());
  }
  return flows;
}

std::string flows_to_json(const std::map<std::string, std::int64_t>& flows) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [dst, visits] : flows) j[dst] = visits;
  return j.dump();
}

DailyCbgRecord parse_mobility_row(const csv::Table& table, const std::vector<std::string>& row,
                                  const std::array<std::size_t, 7>& col) {
  if (row.size() != table.header.size()) {
    throw DataError(fmt::format("expected {} fields, found {}", table.header.size(), row.size()));
  }
  DailyCbgRecord rec;
  rec.cbg_id = row[col[0]];
  if (!is_cbg_id(rec.cbg_id)) throw DataError(fmt::format("cbg_id '{}' is not a 12-digit code", rec.cbg_id));
  rec.date = parse_date(row[col[1]]);
  rec.device_count = csv::to_int(row[col[2]]);
  rec.completely_home_count = csv::to_int(row[col[3]]);
  rec.median_pct_time_home = csv::to_double(row[col[4]]);
  rec.median_distance_from_home = csv::to_double(row[col[5]]);
  rec.destination_flows = parse_flows(row[col[6]]);
  if (rec.device_count < 0) throw DataError(fmt::format("device_count {} is negative", rec.device_count));
  if (rec.completely_home_count < 0) {
    throw DataError(fmt::format("completely_home_device_count {} is negative", rec.completely_home_count));
  }
  if (rec.completely_home_count > rec.device_count) {
    throw DataError(fmt::format("completely_home_device_count {} exceeds device_count {}", rec.completely_home_count,
                                rec.device_count));
  }
  if (!(rec.median_pct_time_home >= 0.0 && rec.median_pct_time_home <= 1.0)) {
    throw DataError(fmt::format("median_pct_time_home {} outside [0,1]", rec.median_pct_time_home));
  }
  if (!(rec.median_distance_from_home >= 0.0)) {
    throw DataError(fmt::format("median_distance_from_home {} is negative", rec.median_distance_from_home));
  }
  return rec;
}

std::int64_t cumulative_at(std::span<const FatalityRecord> sorted, Date d) {
  auto it = std::upper_bound(sorted.begin(), sorted.end(), d,
                             [](Date value, const FatalityRecord& r) { return value < r.date; });
  if (it == sorted.begin()) {
    throw DataError(fmt::format("fatality series starts after {}", format_date(d)));
  }
  return std::prev(it)->cumulative_deaths;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open input file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write output file '{}'", path.string()));
  out << content;
}

MobilityParseResult parse_mobility_csv_text(const std::string& text) {
  const auto table = csv::parse(text);
  std::array<std::size_t, 7> col{};
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = table.column(kMobilityColumns[i]);

  MobilityParseResult result;
  std::set<std::pair<std::string, Date>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      auto rec = parse_mobility_row(table, table.rows[r], col);
      if (!seen.emplace(rec.cbg_id, rec.date).second) {
        throw DataError(fmt::format("duplicate row for cbg {} on {}", rec.cbg_id, format_date(rec.date)));
      }
      result.records.push_back(std::move(rec));
    } catch (const DataError& e) {
      result.rejected.push_back({table.lines[r], e.what()});
    }
  }
  return result;
}

MobilityParseResult parse_mobility_csv(const std::filesystem::path& path) {
  return parse_mobility_csv_text(read_file(path));
}

std::vector<FatalityRecord> parse_fatalities_csv_text(const std::string& text) {
  const auto table = csv::parse(text);
  const auto date_col = table.column(kFatalityColumns[0]);
  const auto count_col = table.column(kFatalityColumns[1]);
  std::vector<FatalityRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.size() != table.header.size()) {
        throw DataError(fmt::format("expected {} fields, found {}", table.header.size(), row.size()));
      }
      FatalityRecord rec{parse_date(row[date_col]), csv::to_int(row[count_col])};
      if (rec.cumulative_deaths < 0) throw DataError(fmt::format("cumulative_deaths {} is negative", rec.cumulative_deaths));
      out.push_back(rec);
    } catch (const DataError& e) {
      throw DataError(fmt::format("fatalities line {}: {}", table.lines[r], e.what()));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].date == out[i - 1].date) {
      throw DataError(fmt::format("duplicate fatality record for {}", format_date(out[i].date)));
    }
    if (out[i].cumulative_deaths < out[i - 1].cumulative_deaths) {
      throw DataError(fmt::format("cumulative deaths decrease on {} ({} -> {})", format_date(out[i].date),
                                  out[i - 1].cumulative_deaths, out[i].cumulative_deaths));
    }
  }
  return out;
}

std::vector<FatalityRecord> parse_fatalities_csv(const std::filesystem::path& path) {
  return parse_fatalities_csv_text(read_file(path));
}

std::vector<CbgDemographics> parse_demographics_csv_text(const std::string& text) {
  const auto table = csv::parse(text);
  std::array<std::size_t, 9> col{};
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = table.column(kDemographicColumns[i]);
  std::vector<CbgDemographics> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.size() != table.header.size()) {
        throw DataError(fmt::format("expected {} fields, found {}", table.header.size(), row.size()));
      }
      CbgDemographics d;
      d.cbg_id = row[col[0]];
      if (!is_cbg_id(d.cbg_id)) throw DataError(fmt::format("cbg_id '{}' is not a 12-digit code", d.cbg_id));
      double total = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        d.race_fractions[k] = csv::to_double(row[col[1 + k]]);
        if (!(d.race_fractions[k] >= 0.0 && d.race_fractions[k] <= 1.0)) {
          throw DataError(fmt::format("{} fraction {} outside [0,1]", kRaceNames[k], d.race_fractions[k]));
        }
        total += d.race_fractions[k];
      }
      if (std::fabs(total - 1.0) > 1e-6) throw DataError(fmt::format("race fractions sum to {}, not 1", total));
      d.older50_fraction = csv::to_double(row[col[6]]);
      if (!(d.older50_fraction >= 0.0 && d.older50_fraction <= 1.0)) {
        throw DataError(fmt::format("older50 fraction {} outside [0,1]", d.older50_fraction));
      }
      d.median_income = csv::to_double(row[col[7]]);
      d.population = csv::to_int(row[col[8]]);
      if (d.population < 0) throw DataError(fmt::format("population {} is negative", d.population));
      if (!seen.insert(d.cbg_id).second) throw DataError(fmt::format("duplicate demographics for {}", d.cbg_id));
      out.push_back(std::move(d));
    } catch (const DataError& e) {
      throw DataError(fmt::format("demographics line {}: {}", table.lines[r], e.what()));
    }
  }
  return out;
}

std::vector<CbgDemographics> parse_demographics_csv(const std::filesystem::path& path) {
  return parse_demographics_csv_text(read_file(path));
}

std::string mobility_to_csv(std::span<const DailyCbgRecord> records) {
  std::string out = fmt::format("{}\n", fmt::join(kMobilityColumns, ","));
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.cbg_id, format_date(r.date), r.device_count,
                       r.completely_home_count, csv::format_double(r.median_pct_time_home),
                       csv::format_double(r.median_distance_from_home),
                       csv::escape(flows_to_json(r.destination_flows)));
  }
  return out;
}

std::string fatalities_to_csv(std::span<const FatalityRecord> records) {
  std::string out = "date,cumulative_deaths\n";
  for (const auto& r : records) out += fmt::format("{},{}\n", format_date(r.date), r.cumulative_deaths);
  return out;
}

std::string demographics_to_csv(std::span<const CbgDemographics> rows) {
  std::string out = fmt::format("{}\n", fmt::join(kDemographicColumns, ","));
  for (const auto& d : rows) {
    out += d.cbg_id;
    for (double f : d.race_fractions) out += "," + csv::format_double(f);
    out += fmt::format(",{},{},{}\n", csv::format_double(d.older50_fraction), csv::format_double(d.median_income),
                       d.population);
  }
  return out;
}

double national_home_fraction(std::span<const DailyCbgRecord> records) {
  std::int64_t home = 0;
  std::int64_t devices = 0;
  for (const auto& r : records) {
    home += r.completely_home_count;
    devices += r.device_count;
  }
  if (devices <= 0) throw DataError("national home fraction undefined: no devices reported for the day");
  return static_cast<double>(home) / static_cast<double>(devices);
}

WeeklyPair weekly_aggregate(std::span<const DailyCbgRecord> mobility, std::span<const FatalityRecord> fatalities,
                            std::optional<Date> anchor) {
  if (mobility.empty()) throw DataError("weekly aggregation needs mobility records");
  if (fatalities.empty()) throw DataError("weekly aggregation needs fatality records");

  // Pooled per-day counts; CBGs absent on a day simply do not contribute.
  std::map<Date, std::pair<std::int64_t, std::int64_t>> daily;
  for (const auto& r : mobility) {
    auto& [home, devices] = daily[r.date];
    home += r.completely_home_count;
    devices += r.device_count;
  }
  std::vector<FatalityRecord> deaths(fatalities.begin(), fatalities.end());
  std::sort(deaths.begin(), deaths.end(), [](const auto& a, const auto& b) { return a.date < b.date; });

  Date start;
  if (anchor) {
    start = *anchor;
  } else {
    auto it = std::find_if(daily.begin(), daily.end(), [&](const auto& kv) {
      return std::binary_search(deaths.begin(), deaths.end(), FatalityRecord{kv.first, 0},
                                [](const auto& a, const auto& b) { return a.date < b.date; });
    });
    if (it == daily.end()) throw DataError("mobility and fatality inputs share no common date");
    start = it->first;
  }
  if (start < daily.begin()->first || start > daily.rbegin()->first) {
    throw DataError(fmt::format("anchor {} outside the mobility coverage", format_date(start)));
  }
  if (start < deaths.front().date || start > deaths.back().date) {
    throw DataError(fmt::format("anchor {} outside the fatality coverage", format_date(start)));
  }

  const Date last = std::min(daily.rbegin()->first, deaths.back().date);
  const int span = days_between(start, last) + 1;
  const int weeks = span / 7;

  WeeklyPair out;
  std::int64_t previous_cumulative = cumulative_at(deaths, start);
  for (int w = 0; w < weeks; ++w) {
    const Date week_start = add_days(start, 7 * w);
    double sum = 0.0;
    int days = 0;
    for (int d = 0; d < 7; ++d) {
      auto it = daily.find(add_days(week_start, d));
      if (it == daily.end() || it->second.second <= 0) continue;
      sum += static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
      ++days;
    }
    if (days == 0) {
      throw DataError(fmt::format("week starting {} has zero total devices", format_date(week_start)));
    }
    const std::int64_t cumulative = cumulative_at(deaths, add_days(week_start, 6));
    out.week_start.push_back(week_start);
    out.h_us.push_back(sum / days);
    out.deaths.push_back(static_cast<double>(cumulative - previous_cumulative));
    previous_cumulative = cumulative;
  }
  return out;
}

std::string weekly_to_csv(const WeeklyPair& weekly) {
  std::string out = "week_start,h_us,deaths\n";
  for (std::size_t i = 0; i < weekly.size(); ++i) {
    out += fmt::format("{},{},{}\n", format_date(weekly.week_start[i]), csv::format_double(weekly.h_us[i]),
                       csv::format_double(weekly.deaths[i]));
  }
  return out;
}

WeeklyPair parse_weekly_csv_text(const std::string& text) {
  const auto table = csv::parse(text);
  const auto c_week = table.column("week_start");
  const auto c_h = table.column("h_us");
  const auto c_d = table.column("deaths");
  WeeklyPair out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.size() != table.header.size()) {
        throw DataError(fmt::format("expected {} fields, found {}", table.header.size(), row.size()));
      }
      const double h = csv::to_double(row[c_h]);
      const double d = csv::to_double(row[c_d]);
      if (!(h >= 0.0 && h <= 1.0)) throw DataError(fmt::format("h_us {} outside [0,1]", h));
      if (!(d >= 0.0)) throw DataError(fmt::format("weekly deaths {} negative", d));
      out.week_start.push_back(parse_date(row[c_week]));
      out.h_us.push_back(h);
      out.deaths.push_back(d);
    } catch (const DataError& e) {
      throw DataError(fmt::format("weekly line {}: {}", table.lines[r], e.what()));
    }
  }
  return out;
}

WeeklyPair parse_weekly_csv(const std::filesystem::path& path) { return parse_weekly_csv_text(read_file(path)); }

SyntheticDataset synthesize_dataset(const SynthConfig& config) {
  if (config.cbg_count == 0) throw UsageError("synthetic config: cbg_count must be positive");
  if (config.day_count == 0) throw UsageError("synthetic config: day_count must be positive");
  if (config.coupling_lag < 0) throw UsageError("synthetic config: coupling_lag must be nonnegative");
  if (config.mobility_noise < 0.0 || config.death_noise < 0.0) {
    throw UsageError("synthetic config: noise scales must be nonnegative");
  }
  if (!(std::fabs(config.mobility_persistence) < 1.0)) {
    throw UsageError("synthetic config: mobility_persistence must lie in (-1, 1)");
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto gamma = [&](double shape) { return std::gamma_distribution<double>(shape, 1.0)(rng); };

  SyntheticDataset data;
  const std::size_t n_cbg = config.cbg_count;
  std::vector<std::int64_t> base_devices(n_cbg);
  std::vector<double> home_offset(n_cbg);
  std::vector<double> pct_offset(n_cbg);
  std::vector<std::array<std::size_t, 2>> neighbours(n_cbg);
  constexpr std::array<double, 5> race_alpha{3.0, 1.0, 0.8, 0.4, 0.3};

  for (std::size_t c = 0; c < n_cbg; ++c) {
    CbgDemographics d;
    d.cbg_id = fmt::format("42003{:06d}1", 100 + c);
    double total = 0.0;
    for (std::size_t k = 0; k < 5; ++k) total += (d.race_fractions[k] = gamma(race_alpha[k]));
    for (auto& f : d.race_fractions) f /= total;
    const double g1 = gamma(3.0);
    d.older50_fraction = g1 / (g1 + gamma(4.0));
    d.median_income = std::round(std::exp(std::log(60000.0) + 0.45 * normal(rng)));
    d.population = 400 + static_cast<std::int64_t>(uniform(rng) * 2600.0);
    base_devices[c] = std::max<std::int64_t>(20, std::llround(static_cast<double>(d.population) * (0.05 + 0.07 * uniform(rng))));
    home_offset[c] = 0.3 * normal(rng) + 0.4 * (d.race_fractions[2] - d.race_fractions[1]);
    pct_offset[c] = 0.2 * normal(rng);
    neighbours[c] = {static_cast<std::size_t>(uniform(rng) * n_cbg) % n_cbg,
                     static_cast<std::size_t>(uniform(rng) * n_cbg) % n_cbg};
    data.demographics.push_back(std::move(d));
  }

  const std::size_t n_weeks_latent = (config.day_count + 6) / 7;
  std::vector<double> shock(n_weeks_latent);
  const double rho = config.mobility_persistence;
  double change = 0.0;
  for (std::size_t w = 0; w < n_weeks_latent; ++w) {
    const double innovation = config.mobility_noise * normal(rng);
    change = w == 0 ? innovation / std::sqrt(1.0 - rho * rho) : rho * change + innovation;
    shock[w] = w == 0 ? change : shock[w - 1] + change;
  }

  const double base_logit = stats::logit(0.25);
  std::vector<double> daily_fraction(config.day_count);
  data.mobility.reserve(n_cbg * config.day_count);
  for (std::size_t day = 0; day < config.day_count; ++day) {
    const Date date = add_days(config.start, static_cast<int>(day));
    std::int64_t home_total = 0;
    std::int64_t device_total = 0;
    for (std::size_t c = 0; c < n_cbg; ++c) {
      DailyCbgRecord rec;
      rec.cbg_id = data.demographics[c].cbg_id;
      rec.date = date;
      rec.device_count = std::binomial_distribution<std::int64_t>(base_devices[c] + base_devices[c] / 4, 0.8)(rng);
      const double p_home =
          std::clamp(stats::inv_logit(base_logit + home_offset[c] + 0.1 * normal(rng)) + shock[day / 7], 0.01, 0.99);
      const double eta = stats::logit(p_home);
      rec.completely_home_count = std::binomial_distribution<std::int64_t>(rec.device_count, p_home)(rng);
      rec.median_pct_time_home = stats::inv_logit(0.9 + 0.8 * (eta - base_logit) + pct_offset[c] + 0.15 * normal(rng));
      rec.median_distance_from_home = std::round(std::exp(std::log(4000.0) - 0.8 * (eta - base_logit) + 0.3 * normal(rng)));
      const std::int64_t out_devices = rec.device_count - rec.completely_home_count;
      if (out_devices > 0) {
        const auto self = std::binomial_distribution<std::int64_t>(out_devices, 0.3)(rng);
        if (self > 0) rec.destination_flows[rec.cbg_id] += self;
        for (auto nb : neighbours[c]) {
          const auto visits = std::binomial_distribution<std::int64_t>(out_devices, 0.2)(rng);
          if (visits > 0) rec.destination_flows[data.demographics[nb].cbg_id] += visits;
        }
      }
      home_total += rec.completely_home_count;
      device_total += rec.device_count;
      data.mobility.push_back(std::move(rec));
    }
    daily_fraction[day] = device_total > 0 ? static_cast<double>(home_total) / static_cast<double>(device_total) : 0.0;
  }

  // Realized weekly h_US over complete weeks, as weekly_aggregate will see it.
  const std::size_t n_weeks = config.day_count / 7;
  std::vector<double> weekly_h(n_weeks);
  for (std::size_t w = 0; w < n_weeks; ++w) {
    double s = 0.0;
    for (std::size_t d = 0; d < 7; ++d) s += daily_fraction[7 * w + d];
    weekly_h[w] = s / 7.0;
  }
  const double h_mean = n_weeks > 0 ? stats::mean(weekly_h) : 0.0;
  const auto lag = static_cast<std::size_t>(config.coupling_lag);

  std::vector<std::int64_t> new_deaths(config.day_count, 0);
  for (std::size_t w = 0; w < n_weeks; ++w) {
    double expected = config.baseline_deaths;
    if (w >= lag) expected += config.coupling_strength * (weekly_h[w - lag] - h_mean);
    const auto weekly = std::max<std::int64_t>(0, std::llround(expected + config.death_noise * normal(rng)));
    // Week 0 is measured against the anchor day's cumulative, so its deaths land on days 1..6.
    const std::size_t first = w == 0 ? 1 : 7 * w;
    const std::size_t last = 7 * w + 6;
    const auto slots = static_cast<std::int64_t>(last - first + 1);
    for (std::size_t d = first; d <= last; ++d) {
      const auto k = static_cast<std::int64_t>(d - first);
      new_deaths[d] = weekly / slots + (k < weekly % slots ? 1 : 0);
    }
  }
  for (std::size_t d = 7 * n_weeks; d < config.day_count; ++d) {
    new_deaths[d] = std::max<std::int64_t>(0, std::llround(config.baseline_deaths / 7.0));
  }

  std::int64_t cumulative = 0;
  for (std::size_t day = 0; day < config.day_count; ++day) {
    cumulative += new_deaths[day];
    data.fatalities.push_back({add_days(config.start, static_cast<int>(day)), cumulative});
  }
  return data;
}

}  // namespace mobstat::ingest
