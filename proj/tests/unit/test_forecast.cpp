#include <random>

#include <doctest.h>

#include "mobstat/errors.hpp"
#include "mobstat/forecast.hpp"
#include "mobstat/granger.hpp"
#include "mobstat/ols.hpp"
#include "oracles.hpp"

using namespace mobstat;
using namespace mobstat::forecast;

using testing::simulate_var;

TEST_CASE("noiseless VAR is recovered exactly") {
  const auto w = simulate_var(1, 40, 0.0);
  const auto m = var_fit(w);
  CHECK(m.intercept == doctest::Approx(150.0).epsilon(1e-8));
  CHECK(m.death_coefficients[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(m.death_coefficients[1] == doctest::Approx(-0.2).epsilon(1e-8));
  CHECK(m.death_coefficients[2] == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(m.mobility_coefficients[0] == doctest::Approx(80.0).epsilon(1e-8));
  CHECK(m.mobility_coefficients[1] == doctest::Approx(40.0).epsilon(1e-8));
  CHECK(m.mobility_coefficients[2] == doctest::Approx(-900.0).epsilon(1e-8));
  const auto fit = var_ols(w.h_us, w.deaths);
  CHECK(fit.rss < 1e-12 * fit.tss);

  const std::size_t t = 39;
  const std::vector<double> h{w.h_us[t - 1], w.h_us[t - 2], w.h_us[t - 3]};
  const std::vector<double> y{w.deaths[t - 1], w.deaths[t - 2], w.deaths[t - 3]};
  CHECK(var_predict_one(m, h, y) == doctest::Approx(w.deaths[t]).epsilon(1e-6));

  for (const auto& p : rolling_backtest(w, 5)) CHECK(p.predicted == doctest::Approx(p.actual).epsilon(1e-6));
}

TEST_CASE("var_fit equals OLS on the unrestricted Granger design") {
  const auto w = simulate_var(2, 50, 25.0);
  const auto m = var_fit(w);
  const auto design = granger::lag_design(w.h_us, w.deaths, 3, true);
  Eigen::VectorXd resp(design.rows());
  for (Eigen::Index i = 0; i < resp.size(); ++i) resp[i] = w.deaths[static_cast<std::size_t>(i) + 3];
  const auto fit = stats::ols_fit(design, resp);
  CHECK(m.intercept == doctest::Approx(fit.coefficients[0]).epsilon(1e-12));
  for (int k = 0; k < 3; ++k) {
    CHECK(m.death_coefficients[k] == doctest::Approx(fit.coefficients[1 + k]).epsilon(1e-12));
    CHECK(m.mobility_coefficients[k] == doctest::Approx(fit.coefficients[4 + k]).epsilon(1e-12));
  }
  CHECK(m.r2 == doctest::Approx(fit.r2));
}

TEST_CASE("prediction arithmetic") {
  VarModel zero;
  zero.intercept = 100.0;
  CHECK(var_predict_one(zero, std::vector<double>{0.1, 0.9, 0.4}, std::vector<double>{5, 6, 7}) == 100.0);

  const auto published = var_model_from_json(testing::load_fixture("var_model.json"));
  const std::vector<double> h(3, 0.3);
  const std::vector<double> y(3, 1000.0);
  CHECK(var_predict_one(published, h, y) == doctest::Approx(951.68).epsilon(1e-12));

  // Affine in the death history once mobility terms vanish.
  VarModel m = published;
  m.mobility_coefficients = {0, 0, 0};
  m.intercept = 40.0;
  const double once = var_predict_one(m, h, y) - 40.0;
  const double twice = var_predict_one(m, h, std::vector<double>(3, 2000.0)) - 40.0;
  CHECK(twice == doctest::Approx(2.0 * once));

  CHECK_THROWS_AS(var_predict_one(m, std::vector<double>{1, 2}, y), UsageError);
}

TEST_CASE("published model prints in the expected layout") {
  const auto m = var_model_from_json(testing::load_fixture("var_model.json"));
  const auto table = format_table(m);
  CHECK(table.find("h_US(t-3)") != std::string::npos);
  CHECK(table.find("-384.7") != std::string::npos);
  CHECK(table.find("1250") != std::string::npos);
  CHECK(table.find("0.86") != std::string::npos);
  const auto back = var_model_from_json(to_json(m));
  CHECK(back.mobility_coefficients == m.mobility_coefficients);
  CHECK(back.death_coefficients == m.death_coefficients);
}

TEST_CASE("minimum training span") {
  CHECK_THROWS_AS(var_fit(simulate_var(3, kMinTrainingWeeks - 1, 5.0)), ObservationsError);
  CHECK_NOTHROW(var_fit(simulate_var(3, kMinTrainingWeeks, 5.0)));

  const auto w = simulate_var(4, 12, 5.0);
  const auto one = rolling_backtest(w, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].week_index == 11);
  try {
    rolling_backtest(w, 2);
    FAIL("expected ObservationsError");
  } catch (const ObservationsError& e) {
    CHECK(e.minimum() == kMinTrainingWeeks + 2);
  }
  CHECK_THROWS_AS(rolling_backtest(w, 0), UsageError);
}

TEST_CASE("backtest never reads the future") {
  const auto w = simulate_var(5, 30, 25.0);
  const auto base = rolling_backtest(w, 5);
  REQUIRE(base.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    auto changed = w;
    const std::size_t week = 25 + k;
    changed.deaths[week] += 1e4;
    changed.h_us[week] += 0.5;
    const auto again = rolling_backtest(changed, 5);
    for (std::size_t j = 0; j <= k; ++j) CHECK(again[j].predicted == base[j].predicted);
  }
  CHECK(backtest_to_csv(base).rfind("week_start,actual,predicted\n", 0) == 0);
}

TEST_CASE("backtest is identical in serial and parallel mode") {
  const auto w = simulate_var(21, 40, 30.0);
  const auto a = rolling_backtest(w, 10, Execution::serial);
  const auto b = rolling_backtest(w, 10, Execution::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].predicted == b[i].predicted);
}
