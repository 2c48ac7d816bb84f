#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mobstat/betareg.hpp"
#include "mobstat/date.hpp"

namespace mobstat::cli {

inline constexpr const char* kOutputDirEnv = "MOBSTAT_OUTPUT_DIR";

struct RunConfig {
  std::filesystem::path mobility;
  std::filesystem::path fatalities;
  std::filesystem::path demographics;
  std::optional<Date> anchor;
  int max_lag = 6;
  std::optional<betareg::DateRange> pre_period;
  std::optional<betareg::DateRange> post_period;
  std::string population1;
  std::string population2 = "white";
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 42;

  /// Throws UsageError when the pre and post ranges overlap.
  void validate() const;
};

/// "FIRST:LAST" with ISO dates, both inclusive.
betareg::DateRange parse_date_range(const std::string& text);

/// Flag value, else MOBSTAT_OUTPUT_DIR, else the current directory.
std::filesystem::path resolve_output_dir(const std::string& flag_value);

/// args excludes the program name. Returns the process exit status.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mobstat::cli
