#include <random>

#include <doctest.h>

#include "mobstat/betareg.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/special.hpp"
#include "oracles.hpp"

using namespace mobstat;
using namespace mobstat::betareg;

namespace {

double central_difference(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd theta, Eigen::Index k,
                          double h) {
  theta[k] += h;
  const double up = log_likelihood(x, y, theta, false).value;
  theta[k] -= 2 * h;
  const double down = log_likelihood(x, y, theta, false).value;
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("likelihood agrees with a direct density sum") {
  const auto d = testing::synthetic_beta_design(1, 50, {0.3, -0.8}, 6.0);
  const auto x = testing::with_intercept(d.covariates);
  Eigen::VectorXd theta(3);
  theta << 0.2, -0.5, std::log(5.0);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-(0.2 - 0.5 * d.covariates(i, 0))));
    direct += beta_log_density(d.response[i], beta_density_params(mu, 5.0));
  }
  CHECK(log_likelihood(x, d.response, theta).value == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("analytic gradient and Hessian match finite differences") {
  const auto d = testing::synthetic_beta_design(2, 300, {1.0, -0.5, 0.7}, 10.0);
  const auto x = testing::with_intercept(d.covariates);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd theta(4);
    theta << u(rng), u(rng), u(rng), std::log(3.0 + 10.0 * (u(rng) + 1.0));
    const auto terms = log_likelihood(x, d.response, theta, true);
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double fd = central_difference(x, d.response, theta, k, 1e-6);
      CHECK(terms.gradient[k] == doctest::Approx(fd).epsilon(1e-4));
      for (Eigen::Index l = 0; l < 4; ++l) {
        Eigen::VectorXd up = theta, down = theta;
        up[l] += 1e-5;
        down[l] -= 1e-5;
        const double hd = (log_likelihood(x, d.response, up, false).gradient[k] -
                           log_likelihood(x, d.response, down, false).gradient[k]) /
                          2e-5;
        CHECK(terms.hessian(k, l) == doctest::Approx(hd).epsilon(1e-4).scale(1e-3));
      }
    }
  }
}

TEST_CASE("serial and parallel likelihood agree bitwise") {
  const auto d = testing::synthetic_beta_design(3, 20000, {0.5, 1.0}, 8.0);
  const auto x = testing::with_intercept(d.covariates);
  Eigen::VectorXd theta(3);
  theta << 0.4, 0.9, 2.0;
  const auto s = log_likelihood(x, d.response, theta, true, Execution::serial);
  const auto p = log_likelihood(x, d.response, theta, true, Execution::parallel);
  CHECK(s.value == p.value);
  CHECK(s.gradient == p.gradient);
  CHECK(s.hessian == p.hessian);
}

TEST_CASE("recovers the generating parameters") {
  const auto d = testing::synthetic_beta_design(4, 5000, {1.0, -0.5}, 10.0);
  const auto fit = betareg_fit(d);
  CHECK(fit.converged);
  CHECK(fit.gradient_norm < 1e-8);
  CHECK(fit.coefficients[0] == doctest::Approx(1.0).epsilon(0.05).scale(1));
  CHECK(std::abs(fit.coefficients[1] + 0.5) < 0.05);
  CHECK(std::abs(fit.precision_phi - 10.0) < 1.0);
  CHECK(fit.n_obs == 5000);
  CHECK(fit.standard_errors.size() == 2);
  CHECK(fit.standard_errors[1] > 0.0);
  for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
    CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1]);
  }
  CHECK(fit.coefficient_names == std::vector<std::string>{"constant", "x1"});
}

TEST_CASE("intercept-only symmetric data") {
  betareg::CovariateDesign d;
  d.covariates.resize(8, 0);
  d.response.resize(8);
  d.response << 0.2, 0.8, 0.35, 0.65, 0.45, 0.55, 0.1, 0.9;
  const auto fit = betareg_fit(d);
  CHECK(fit.coefficients[0] == doctest::Approx(0.0).scale(1).epsilon(1e-8));
  const double mu = predict_mean(fit, std::vector<double>{});
  CHECK(mu == doctest::Approx(0.5));
  CHECK(mu >= d.response.minCoeff());
  CHECK(mu <= d.response.maxCoeff());
}

TEST_CASE("collinear race fractions still converge") {
  std::mt19937_64 rng(5);
  betareg::CovariateDesign d;
  const int n = 400;
  d.covariates.resize(n, 3);
  d.response.resize(n);
  d.names = {"a", "b", "c"};
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double w[3] = {g(rng), g(rng), g(rng)};
    const double s = w[0] + w[1] + w[2];
    double eta = 0.5;
    const double coef[3] = {-0.4, 0.3, 0.6};
    for (int j = 0; j < 3; ++j) {
      d.covariates(i, j) = w[j] / s;
      eta += coef[j] * w[j] / s;
    }
    const double mu = 1.0 / (1.0 + std::exp(-eta));
    d.response[i] = testing::beta_draw(rng, mu * 12.0, (1 - mu) * 12.0);
  }
  const auto fit = betareg_fit(d);
  CHECK(fit.converged);
  CHECK(fit.rank_deficient);
  // Only contrasts are identified; predictions for one-hot blocks are.
  const double block_a = predict_mean(fit, std::vector<double>{1, 0, 0});
  const double block_c = predict_mean(fit, std::vector<double>{0, 0, 1});
  CHECK(block_a < block_c);
  CHECK(std::abs(block_a - 1.0 / (1.0 + std::exp(-0.1))) < 0.05);
}

TEST_CASE("boundary and size errors") {
  auto d = testing::synthetic_beta_design(6, 20, {0.0, 1.0}, 5.0);
  d.response[3] = 1.0;
  try {
    betareg_fit(d);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("adjust") != std::string::npos);
  }
  CHECK(adjust_boundary(d.response) == 1);
  CHECK(d.response[3] == doctest::Approx((19.0 + 0.5) / 20.0));
  CHECK_NOTHROW(betareg_fit(d));
  const auto tiny = testing::synthetic_beta_design(7, 3, {0.0, 1.0}, 5.0);
  CHECK_THROWS_AS(betareg_fit(tiny), ObservationsError);
}

TEST_CASE("published race models predict the block means") {
  const auto models = testing::load_models("race_models.json");
  CHECK(predict_mean(models.pre, testing::one_hot(5, 3)) == doctest::Approx(0.729).epsilon(1e-3));
  CHECK(predict_mean(models.pre, testing::one_hot(5, 4)) == doctest::Approx(0.707).epsilon(1e-3));
  CHECK(predict_mean(models.pre, std::vector<double>(5, 0.0)) == doctest::Approx(1.0 / (1.0 + std::exp(-1.39))));
  CHECK_THROWS_AS(predict_mean(models.pre, std::vector<double>(4, 0.0)), UsageError);
  const auto again = fit_from_json(to_json(models.pre));
  CHECK(again.coefficients == models.pre.coefficients);
  CHECK(again.precision_phi == 14.5);
  CHECK(again.coefficient_names == models.pre.coefficient_names);
  CHECK(format_table(models.pre).find("natives_others") != std::string::npos);
}

TEST_CASE("beta shape parameters") {
  const auto u = beta_density_params(0.5, 2.0);
  CHECK(u.alpha == 1.0);
  CHECK(u.beta == 1.0);
  const auto w = beta_density_params(0.718, 14.5);
  CHECK(w.alpha == doctest::Approx(10.411));
  CHECK(w.beta == doctest::Approx(4.089));
  CHECK(beta_density_params(0.5, 999).variance() == doctest::Approx(0.25 / 1000));
  CHECK_THROWS_AS(beta_density_params(1.0, 3.0), DomainError);
  CHECK_THROWS_AS(beta_density_params(0.4, 0.0), DomainError);
}

TEST_CASE("density integrates to one") {
  for (auto [mu, phi] : {std::pair{0.718, 14.5}, std::pair{0.3, 5.0}, std::pair{0.9, 60.0}, std::pair{0.5, 4.0}}) {
    const auto s = beta_density_params(mu, phi);
    const auto f = [&](double y) { return y <= 0.0 || y >= 1.0 ? 0.0 : std::exp(beta_log_density(y, s)); };
    CHECK(testing::trapezoid(f, 0.0, 1.0, 200000) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("covariate sets") {
  const auto s = parse_covariate_set("race+income");
  CHECK(s.race);
  CHECK(s.income);
  CHECK_FALSE(s.older50);
  CHECK(parse_covariate_set("age").older50);
  CHECK_THROWS_AS(parse_covariate_set("race+height"), UsageError);
}

TEST_CASE("design from records averages each CBG over the window") {
  const Date d0 = parse_date("2020-02-01");
  std::vector<ingest::DailyCbgRecord> m;
  for (int day = 0; day < 4; ++day) {
    ingest::DailyCbgRecord r;
    r.cbg_id = "420030001001";
    r.date = add_days(d0, day);
    r.device_count = 10;
    r.median_pct_time_home = 0.5 + 0.1 * day;
    m.push_back(r);
  }
  ingest::CbgDemographics demo;
  demo.cbg_id = "420030001001";
  demo.race_fractions = {0.5, 0.5, 0, 0, 0};
  demo.median_income = 42000;
  const auto design = design_from_records(m, std::vector{demo}, {d0, add_days(d0, 1)},
                                          CovariateSet{true, false, true, IncomeUnits::thousands});
  REQUIRE(design.response.size() == 1);
  CHECK(design.response[0] == doctest::Approx(0.55));
  CHECK(design.covariates(0, 5) == doctest::Approx(42.0));
  CHECK(design.names.back() == "median_income");
}
