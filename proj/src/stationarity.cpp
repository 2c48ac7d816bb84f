#include "mobstat/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "mobstat/errors.hpp"

namespace mobstat::stationarity {

int kpss_auto_lag(std::size_t length) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(length) / 100.0, 0.25)));
}

double bartlett_long_run_variance(std::span<const double> residuals, int lag) {
  const auto t_len = residuals.size();
  const double n = static_cast<double>(t_len);
  double s2 = 0.0;
  for (double e : residuals) s2 += e * e;
  for (int s = 1; s <= lag && static_cast<std::size_t>(s) < t_len; ++s) {
    double autocov = 0.0;
    for (std::size_t t = static_cast<std::size_t>(s); t < t_len; ++t) autocov += residuals[t] * residuals[t - s];
    s2 += 2.0 * (1.0 - static_cast<double>(s) / (lag + 1.0)) * autocov;
  }
  return s2 / n;
}

KpssResult kpss_test(std::span<const double> series, std::optional<int> truncation_lag) {
  const auto t_len = series.size();
  if (t_len < kKpssMinLength) {
    throw ObservationsError(fmt::format("KPSS needs at least {} observations, got {}", kKpssMinLength, t_len),
                            kKpssMinLength);
  }
  const int lag = truncation_lag.value_or(kpss_auto_lag(t_len));
  if (lag < 0) throw DomainError(fmt::format("KPSS truncation lag must be nonnegative, got {}", lag));

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(t_len);

  std::vector<double> resid(t_len);
  double scale = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    resid[t] = series[t] - mean;
    scale = std::max(scale, std::fabs(series[t]));
  }
  const bool constant = std::all_of(resid.begin(), resid.end(), [&](double e) {
    return std::fabs(e) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
  });
  if (constant) throw DomainError("KPSS statistic undefined: series has zero variance (constant)");

  double partial = 0.0;
  double sum_sq_partial = 0.0;
  for (double e : resid) {
    partial += e;
    sum_sq_partial += partial * partial;
  }
  const double lrv = bartlett_long_run_variance(resid, lag);
  if (!(lrv > 0.0)) {
    throw DomainError(fmt::format("KPSS long-run variance estimate is non-positive ({}) at lag {}", lrv, lag));
  }

  KpssResult result;
  result.truncation_lag = lag;
  const double n = static_cast<double>(t_len);
  result.statistic = sum_sq_partial / (n * n) / lrv;
  result.critical_values = kpss_critical_values();
  result.reject_at_5pct = result.statistic > result.critical_values.at(0.05);
  return result;
}

}  // namespace mobstat::stationarity
