#include <doctest.h>

#include "mobstat/errors.hpp"
#include "mobstat/series.hpp"

using namespace mobstat;
using namespace mobstat::stats;

TEST_CASE("first difference") {
  CHECK(difference(std::vector<double>{1, 3, 6}) == std::vector<double>{2, 3});
  CHECK(difference(std::vector<double>{5, 5, 5}) == std::vector<double>{0, 0});
  CHECK(difference(std::vector<double>{4, 1}).size() == 1);
  CHECK_THROWS_AS(difference(std::vector<double>{1}), ObservationsError);
  CHECK(difference(std::vector<double>{1, 4, 9, 16}, 2) == std::vector<double>{2, 2});
  CHECK(difference(std::vector<double>{1, 4}, 0) == std::vector<double>{1, 4});
}

TEST_CASE("logit link") {
  CHECK(link_logit(LinkDirection::inverse, 0.0) == 0.5);
  CHECK(link_logit(LinkDirection::forward, 0.5) == 0.0);
  // Pre-period white block: constant 1.39 plus white coefficient -0.45.
  CHECK(link_logit(LinkDirection::inverse, 0.94) == doctest::Approx(0.7190).epsilon(1e-4));
  for (double v : {1e-9, 0.01, 0.3, 0.999}) {
    CHECK(inv_logit(logit(v)) == doctest::Approx(v).epsilon(1e-12));
  }
  for (double e : {-30.0, -2.0, 0.7, 12.0}) CHECK(logit(inv_logit(e)) == doctest::Approx(e).epsilon(1e-9));
  CHECK(inv_logit(-800.0) >= 0.0);
  CHECK(inv_logit(800.0) == 1.0);
  CHECK_THROWS_AS(logit(0.0), DomainError);
  CHECK_THROWS_AS(logit(1.0), DomainError);
}
