#include "mobstat/forecast.hpp"

#include <sstream>

#include <fmt/format.h>

#include "mobstat/csv.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/granger.hpp"

namespace mobstat::forecast {

stats::OlsFit var_ols(std::span<const double> h_us, std::span<const double> deaths) {
  if (h_us.size() != deaths.size()) {
    throw DataError(fmt::format("series lengths differ ({} vs {})", h_us.size(), deaths.size()));
  }
  if (deaths.size() < kMinTrainingWeeks) {
    throw ObservationsError(
        fmt::format("VAR fit needs at least {} weeks, got {}", kMinTrainingWeeks, deaths.size()), kMinTrainingWeeks);
  }
  Eigen::VectorXd response(static_cast<Eigen::Index>(deaths.size()) - kVarLags);
  for (Eigen::Index i = 0; i < response.size(); ++i) response[i] = deaths[static_cast<std::size_t>(i + kVarLags)];
  return stats::ols_fit(granger::lag_design(h_us, deaths, kVarLags, true), response);
}

VarModel var_fit(std::span<const double> h_us, std::span<const double> deaths) {
  const auto fit = var_ols(h_us, deaths);
  VarModel model;
  model.intercept = fit.coefficients[0];
  for (int i = 0; i < kVarLags; ++i) {
    model.death_coefficients[static_cast<std::size_t>(i)] = fit.coefficients[1 + i];
    model.mobility_coefficients[static_cast<std::size_t>(i)] = fit.coefficients[1 + kVarLags + i];
  }
  model.r2 = fit.r2;
  model.residual_se = fit.residual_se;
  model.standard_errors.assign(fit.coefficient_standard_errors.begin(), fit.coefficient_standard_errors.end());
  model.p_values.assign(fit.p_values.begin(), fit.p_values.end());
  model.n_obs = fit.n_obs;
  return model;
}

VarModel var_fit(const ingest::WeeklyPair& weekly) { return var_fit(weekly.h_us, weekly.deaths); }

double var_predict_one(const VarModel& model, std::span<const double> last3_h, std::span<const double> last3_y) {
  if (last3_h.size() != kVarLags || last3_y.size() != kVarLags) {
    throw UsageError(fmt::format("VAR prediction needs exactly {} trailing values of each series (got {} and {})",
                                 kVarLags, last3_h.size(), last3_y.size()));
  }
  double y = model.intercept;
  for (std::size_t i = 0; i < kVarLags; ++i) {
    y += model.death_coefficients[i] * last3_y[i] + model.mobility_coefficients[i] * last3_h[i];
  }
  return y;
}

std::vector<BacktestPoint> rolling_backtest(const ingest::WeeklyPair& weekly, std::size_t holdout_weeks,
                                            Execution exec) {
  if (holdout_weeks == 0) throw UsageError("holdout_weeks must be at least 1");
  const std::size_t t_len = weekly.size();
  if (t_len < holdout_weeks + kMinTrainingWeeks) {
    throw ObservationsError(
        fmt::format("backtest with {} holdout weeks needs at least {} weeks ({} training), got {}", holdout_weeks,
                    holdout_weeks + kMinTrainingWeeks, kMinTrainingWeeks, t_len),
        holdout_weeks + kMinTrainingWeeks);
  }
  std::vector<BacktestPoint> points(holdout_weeks);
  parallel::for_each_index(holdout_weeks, exec, [&](std::size_t k) {
    const std::size_t target = t_len - holdout_weeks + k;
    const std::span<const double> h(weekly.h_us.data(), target);
    const std::span<const double> y(weekly.deaths.data(), target);
    const auto model = var_fit(h, y);
    const std::array<double, kVarLags> last_h{h[target - 1], h[target - 2], h[target - 3]};
    const std::array<double, kVarLags> last_y{y[target - 1], y[target - 2], y[target - 3]};
    points[k] = {weekly.week_start[target], target, weekly.deaths[target], var_predict_one(model, last_h, last_y)};
  });
  return points;
}

std::string backtest_to_csv(std::span<const BacktestPoint> points) {
  std::string out = "week_start,actual,predicted\n";
  for (const auto& p : points) {
    out += fmt::format("{},{},{}\n", format_date(p.week_start), csv::format_double(p.actual),
                       csv::format_double(p.predicted));
  }
  return out;
}

nlohmann::json to_json(const VarModel& model) {
  nlohmann::json j;
  j["intercept"] = model.intercept;
  j["death_coefficients"] = model.death_coefficients;
  j["mobility_coefficients"] = model.mobility_coefficients;
  j["r2"] = model.r2;
  j["residual_se"] = model.residual_se;
  j["standard_errors"] = model.standard_errors;
  j["p_values"] = model.p_values;
  j["n_obs"] = model.n_obs;
  j["terms"] = {"intercept", "y(t-1)", "y(t-2)", "y(t-3)", "h_us(t-1)", "h_us(t-2)", "h_us(t-3)"};
  return j;
}

VarModel var_model_from_json(const nlohmann::json& j) {
  try {
    VarModel m;
    m.intercept = j.value("intercept", 0.0);
    m.death_coefficients = j.at("death_coefficients").get<std::array<double, kVarLags>>();
    m.mobility_coefficients = j.at("mobility_coefficients").get<std::array<double, kVarLags>>();
    m.r2 = j.value("r2", 0.0);
    m.residual_se = j.value("residual_se", 0.0);
    m.standard_errors = j.value("standard_errors", std::vector<double>{});
    m.p_values = j.value("p_values", std::vector<double>{});
    m.n_obs = j.value("n_obs", std::size_t{0});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed VAR model JSON: {}", e.what()));
  }
}

std::string format_table(const VarModel& model) {
  std::ostringstream out;
  const bool has_p = model.p_values.size() == 1 + 2 * kVarLags;
  auto p_text = [&](std::size_t idx) {
    if (!has_p) return std::string("");
    const double p = model.p_values[idx];
    return p < 0.01 ? std::string("<0.01") : fmt::format("{:.2f}", p);
  };
  out << fmt::format("{:<12} {:>12} {:>8}\n", "Variable", "Coefficient", "p-val");
  for (std::size_t i = 0; i < kVarLags; ++i) {
    out << fmt::format("{:<12} {:>12.4g} {:>8}\n", fmt::format("h_US(t-{})", i + 1), model.mobility_coefficients[i],
                       p_text(1 + kVarLags + i));
  }
  for (std::size_t i = 0; i < kVarLags; ++i) {
    out << fmt::format("{:<12} {:>12.4g} {:>8}\n", fmt::format("y(t-{})", i + 1), model.death_coefficients[i],
                       p_text(1 + i));
  }
  out << fmt::format("{:<12} {:>12.4g} {:>8}\n", "constant", model.intercept, p_text(0));
  out << fmt::format("{:<12} {:>12.2f}\n", "R^2", model.r2);
  out << fmt::format("{:<12} {:>12.4g}\n", "SE_res", model.residual_se);
  return out.str();
}

}  // namespace mobstat::forecast
