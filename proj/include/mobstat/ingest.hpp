#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobstat/date.hpp"

namespace mobstat::ingest {

/// One census block group on one day.
struct DailyCbgRecord {
  std::string cbg_id;  // 12 digits
  Date date;
  std::int64_t device_count = 0;
  std::int64_t completely_home_count = 0;
  double median_pct_time_home = 0.0;  // fraction in [0,1]
  double median_distance_from_home = 0.0;
  std::map<std::string, std::int64_t> destination_flows;

  bool operator==(const DailyCbgRecord&) const = default;
};

struct FatalityRecord {
  Date date;
  std::int64_t cumulative_deaths = 0;

  bool operator==(const FatalityRecord&) const = default;
};

struct WeeklyPair {
  std::vector<Date> week_start;
  std::vector<double> h_us;    // device-weighted fraction of devices completely home
  std::vector<double> deaths;  // new deaths in the week

  std::size_t size() const { return h_us.size(); }
};

enum class Race : std::size_t { white, black, hispanic, asian, natives_others };
inline constexpr std::array<const char*, 5> kRaceNames{"white", "black", "hispanic", "asian", "natives_others"};

struct CbgDemographics {
  std::string cbg_id;
  std::array<double, 5> race_fractions{};  // indexed by Race
  double older50_fraction = 0.0;
  double median_income = 0.0;  // dollars
  std::int64_t population = 0;

  bool operator==(const CbgDemographics&) const = default;
};

struct RowDiagnostic {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct MobilityParseResult {
  std::vector<DailyCbgRecord> records;
  std::vector<RowDiagnostic> rejected;
};

inline constexpr std::array<const char*, 7> kMobilityColumns{
    "cbg_id", "date", "device_count", "completely_home_device_count", "median_pct_time_home",
    "median_distance_from_home", "destination_flows"};
inline constexpr std::array<const char*, 2> kFatalityColumns{"date", "cumulative_deaths"};
inline constexpr std::array<const char*, 9> kDemographicColumns{
    "cbg_id", "white", "black", "hispanic", "asian", "natives_others", "older50", "median_income", "population"};

/// Rows that violate a record invariant are rejected with their line number;
/// a missing column throws SchemaError.
MobilityParseResult parse_mobility_csv(const std::filesystem::path& path);
MobilityParseResult parse_mobility_csv_text(const std::string& text);

/// Sorted by date. Throws on duplicate dates or a decreasing cumulative count.
std::vector<FatalityRecord> parse_fatalities_csv(const std::filesystem::path& path);
std::vector<FatalityRecord> parse_fatalities_csv_text(const std::string& text);

std::vector<CbgDemographics> parse_demographics_csv(const std::filesystem::path& path);
std::vector<CbgDemographics> parse_demographics_csv_text(const std::string& text);

std::string mobility_to_csv(std::span<const DailyCbgRecord> records);
std::string fatalities_to_csv(std::span<const FatalityRecord> records);
std::string demographics_to_csv(std::span<const CbgDemographics> rows);

/// Pooled fraction sum(home) / sum(devices) for one day's records.
double national_home_fraction(std::span<const DailyCbgRecord> records);

/// Consecutive 7-day weeks from `anchor` (default: first date present in both
/// inputs). A trailing partial week is dropped. Week w's deaths are the
/// cumulative count on its last day minus the count on the previous week's
/// last day (the anchor day itself for w = 0).
WeeklyPair weekly_aggregate(std::span<const DailyCbgRecord> mobility, std::span<const FatalityRecord> fatalities,
                            std::optional<Date> anchor = std::nullopt);

std::string weekly_to_csv(const WeeklyPair& weekly);
WeeklyPair parse_weekly_csv_text(const std::string& text);
WeeklyPair parse_weekly_csv(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t cbg_count = 40;
  std::size_t day_count = 728;
  int coupling_lag = 3;               // weeks
  double coupling_strength = -4000.0; // weekly deaths per unit of h_US
  double mobility_noise = 0.01;       // sd of the weekly change in the national stay-home probability
  double mobility_persistence = 0.0;  // AR(1) coefficient of those weekly changes
  double death_noise = 25.0;          // sd of weekly deaths around the linear signal
  double baseline_deaths = 1500.0;
  std::uint64_t seed = 1;
  Date start = Date{std::chrono::year{2020} / 1 / 21};
};

struct SyntheticDataset {
  std::vector<DailyCbgRecord> mobility;
  std::vector<FatalityRecord> fatalities;
  std::vector<CbgDemographics> demographics;
};

/// Deterministic given config.seed. The stay-home level is integrated (its
/// weekly changes are AR(1)), so both national series need one difference.
/// Weekly deaths are
/// baseline + strength * (h_US(w - lag) - mean h_US) + noise on the realized
/// weekly series, so weekly_aggregate recovers the construction exactly.
SyntheticDataset synthesize_dataset(const SynthConfig& config);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mobstat::ingest
