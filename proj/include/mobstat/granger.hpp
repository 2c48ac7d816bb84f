#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mobstat/ingest.hpp"
#include "mobstat/ols.hpp"
#include "mobstat/parallel.hpp"

namespace mobstat::granger {

/// "***" p<0.01, "**" p<0.05, "*" p<0.1, otherwise empty.
std::string significance_stars(double p_value);

struct CoefficientStat {
  double estimate = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::string stars;
};

struct GrangerLagResult {
  int lag = 0;
  std::vector<CoefficientStat> b_coefficients;  // x(t-1) .. x(t-lag)
  double adjusted_r2 = 0.0;                     // unrestricted model
  double restricted_adjusted_r2 = 0.0;
  double rss_restricted = 0.0;
  double rss_unrestricted = 0.0;
  double f_statistic = 0.0;
  double p_value = 1.0;
  std::size_t df_num = 0;
  std::size_t df_den = 0;
  std::size_t n_obs = 0;
};

enum class Direction { forward, reverse };
enum class DirectionRequest { both, forward, reverse };

struct GrangerScan {
  Direction direction = Direction::forward;
  std::string cause;   // name of x
  std::string effect;  // name of y
  int differencing_order = 0;
  std::vector<GrangerLagResult> results;
};

/// Rows t = lag..T-1 of [1, y(t-1..t-lag), x(t-1..t-lag)]; with include_x=false
/// only the intercept and own lags.
Eigen::MatrixXd lag_design(std::span<const double> x, std::span<const double> y, int lag, bool include_x);

/// Smallest series length accepted by granger_test for this lag.
inline std::size_t minimum_length(int lag) { return 3 * static_cast<std::size_t>(lag) + 2; }

/// Does x Granger-cause y at lag m = p = lag?
GrangerLagResult granger_test(std::span<const double> x, std::span<const double> y, int lag);

inline constexpr int kMaxDifferencingOrder = 2;

/// Differences both series together until both pass KPSS at 5%, up to twice.
/// Returns the order. Throws DataError if still nonstationary.
int stationarity_order(std::span<const double> a, std::span<const double> b);

std::vector<GrangerScan> granger_scan(std::span<const double> mobility, std::span<const double> deaths, int max_lag,
                                      DirectionRequest request, Execution exec = Execution::parallel);
std::vector<GrangerScan> granger_scan(const ingest::WeeklyPair& weekly, int max_lag, DirectionRequest request,
                                      Execution exec = Execution::parallel);

DirectionRequest parse_direction(const std::string& text);
std::string to_string(Direction d);

nlohmann::json to_json(const GrangerScan& scan);
GrangerScan scan_from_json(const nlohmann::json& j);

/// Aligned text table: one column per lag, rows b_1..b_L, adjusted R^2, F, (p).
std::string format_table(const GrangerScan& scan);

}  // namespace mobstat::granger
