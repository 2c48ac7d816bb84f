#pragma once

#include <map>
#include <optional>
#include <span>

namespace mobstat::stationarity {

/// Asymptotic upper-tail critical values of the level-stationarity KPSS statistic,
/// keyed by significance level.
inline const std::map<double, double>& kpss_critical_values() {
  static const std::map<double, double> values{{0.10, 0.347}, {0.05, 0.463}, {0.025, 0.574}, {0.01, 0.739}};
  return values;
}

struct KpssResult {
  double statistic = 0.0;
  int truncation_lag = 0;
  std::map<double, double> critical_values;
  bool reject_at_5pct = false;
};

inline constexpr std::size_t kKpssMinLength = 8;

/// floor(4 (T/100)^(1/4))
int kpss_auto_lag(std::size_t length);

/// Bartlett-weighted long-run variance of already-centred residuals.
double bartlett_long_run_variance(std::span<const double> residuals, int lag);

/// KPSS test for level stationarity. Throws ObservationsError for T < 8 and
/// DomainError for a constant series.
KpssResult kpss_test(std::span<const double> series, std::optional<int> truncation_lag = std::nullopt);

}  // namespace mobstat::stationarity
