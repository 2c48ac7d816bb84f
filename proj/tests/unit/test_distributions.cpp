#include <cmath>
#include <random>

#include <doctest.h>

#include "mobstat/distributions.hpp"
#include "mobstat/errors.hpp"
#include "mobstat/special.hpp"
#include "oracles.hpp"

using namespace mobstat;
using namespace mobstat::stats;

TEST_CASE("equal-df F distribution has median 1") {
  for (double d : {1.0, 3.0, 10.0, 57.0}) CHECK(f_cdf(1.0, d, d) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("t distribution is symmetric at zero") {
  for (double df : {0.5, 1.0, 4.0, 30.0, 1e4}) CHECK(t_cdf(0.0, df) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("F(1,10) at 4.96 against integrated density") {
  const double oracle = testing::trapezoid_sqrt([](double x) { return f_pdf(x, 1, 10); }, 0.0, 4.96, 20000);
  CHECK(oracle == doctest::Approx(0.95).epsilon(5e-4));
  CHECK(f_cdf(4.96, 1, 10) == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(f_sf(4.96, 1, 10) == doctest::Approx(0.05).epsilon(1e-2));
}

TEST_CASE("closed forms") {
  // t with 1 df is Cauchy.
  for (double x : {-7.0, -1.0, 0.3, 2.0, 50.0}) {
    CHECK(t_cdf(x, 1.0) == doctest::Approx(0.5 + std::atan(x) / M_PI).epsilon(1e-12));
  }
  // F(2, d2) has cdf 1 - (1 + 2x/d2)^(-d2/2).
  for (double x : {0.1, 1.0, 3.0, 12.0}) {
    CHECK(f_cdf(x, 2, 7) == doctest::Approx(1.0 - std::pow(1.0 + 2.0 * x / 7.0, -3.5)).epsilon(1e-12));
  }
  CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("limits and monotonicity") {
  CHECK(f_cdf(0.0, 3, 5) == 0.0);
  CHECK(f_cdf(-1.0, 3, 5) == 0.0);
  CHECK(f_cdf(INFINITY, 3, 5) == 1.0);
  CHECK(t_cdf(-INFINITY, 3) == 0.0);
  CHECK(t_cdf(INFINITY, 3) == 1.0);
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = -20.0 + 0.1 * i;
    const double c = dist_cdf(DistKind::student_t, {2.5, 0}, x);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("quantile inverts the cdf") {
  for (double q : {1e-6, 0.01, 0.05, 0.3, 0.5, 0.77, 0.95, 0.999}) {
    for (DistParams p : {DistParams{1, 1}, DistParams{2, 9}, DistParams{5, 40}, DistParams{30, 3}}) {
      CHECK(dist_cdf(DistKind::f, p, dist_quantile(DistKind::f, p, q)) == doctest::Approx(q).epsilon(1e-8));
      CHECK(dist_cdf(DistKind::student_t, p, dist_quantile(DistKind::student_t, p, q)) ==
            doctest::Approx(q).epsilon(1e-8));
    }
  }
}

TEST_CASE("incomplete beta inverse") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> shape(0.2, 40.0);
  for (int i = 0; i < 500; ++i) {
    const double a = shape(rng);
    const double b = shape(rng);
    const double p = u(rng);
    const double x = incomplete_beta_inverse(a, b, p);
    CHECK(incomplete_beta(a, b, x) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("upper tail keeps precision far out") {
  const double p = f_sf(400.0, 3, 100);
  CHECK(p > 0.0);
  CHECK(p < 1e-50);
  CHECK(t_two_sided_p(0.0, 12) == doctest::Approx(1.0));
}

TEST_CASE("nonpositive degrees of freedom are rejected") {
  CHECK_THROWS_AS(f_cdf(1.0, 0.0, 3.0), DomainError);
  CHECK_THROWS_AS(t_cdf(1.0, -2.0), DomainError);
  CHECK_THROWS_AS(dist_quantile(DistKind::f, {2, 2}, 1.5), DomainError);
}

TEST_CASE("digamma and trigamma") {
  CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-13));
  CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6).epsilon(1e-13));
  CHECK(trigamma(0.5) == doctest::Approx(M_PI * M_PI / 2).epsilon(1e-13));
  for (double x : {0.3, 2.7, 15.0, 120.0}) {
    const double h = 1e-5 * x;
    const double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
    CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-7));
  }
}
