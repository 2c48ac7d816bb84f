#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobstat/ingest.hpp"
#include "mobstat/ols.hpp"
#include "mobstat/parallel.hpp"

namespace mobstat::forecast {

inline constexpr int kVarLags = 3;
/// 3 lags + 7 parameters + one residual degree of freedom.
inline constexpr std::size_t kMinTrainingWeeks = 11;

/// Weekly deaths on an intercept, three own lags and three h_US lags, in levels.
struct VarModel {
  std::array<double, kVarLags> mobility_coefficients{};  // h_US(t-1), h_US(t-2), h_US(t-3)
  std::array<double, kVarLags> death_coefficients{};     // y(t-1), y(t-2), y(t-3)
  double intercept = 0.0;
  double r2 = 0.0;
  double residual_se = 0.0;
  // Inference from the underlying fit, ordered as the design columns:
  // intercept, y(t-1..3), h_US(t-1..3). Empty for models built by hand.
  std::vector<double> standard_errors;
  std::vector<double> p_values;
  std::size_t n_obs = 0;
};

/// Column order of the design: [1, y(t-1..3), h(t-1..3)].
stats::OlsFit var_ols(std::span<const double> h_us, std::span<const double> deaths);

VarModel var_fit(const ingest::WeeklyPair& weekly);
VarModel var_fit(std::span<const double> h_us, std::span<const double> deaths);

/// Trailing values ordered most recent first: last3_h[0] = h_US(t-1).
double var_predict_one(const VarModel& model, std::span<const double> last3_h, std::span<const double> last3_y);

struct BacktestPoint {
  Date week_start;
  std::size_t week_index = 0;
  double actual = 0.0;
  double predicted = 0.0;
};

/// For each of the last `holdout_weeks` weeks, refit on every strictly earlier
/// week and predict that week.
std::vector<BacktestPoint> rolling_backtest(const ingest::WeeklyPair& weekly, std::size_t holdout_weeks,
                                            Execution exec = Execution::parallel);

std::string backtest_to_csv(std::span<const BacktestPoint> points);
nlohmann::json to_json(const VarModel& model);
VarModel var_model_from_json(const nlohmann::json& j);
std::string format_table(const VarModel& model);

}  // namespace mobstat::forecast
