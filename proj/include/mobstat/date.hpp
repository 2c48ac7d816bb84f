#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace mobstat {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline Date add_days(Date d, int n) { return d + std::chrono::days{n}; }
inline int days_between(Date from, Date to) { return static_cast<int>((to - from).count()); }

}  // namespace mobstat
