#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ndflow/error.hpp"
#include "ndflow/quantile.hpp"
#include "support.hpp"

using namespace ndflow;

TEST_CASE("midpoint plotting positions") {
  const std::vector<double> v = {1, 2, 3}, w = {1, 1, 1};
  const WeightedCdf c(v, w);
  CHECK(c.quantile(0.5) == 2.0);
  CHECK(c.quantile(1.0 / 6.0) == 1.0);
  CHECK(c.quantile(0.0) == 1.0);
  CHECK(c.quantile(1.0) == 3.0);
  CHECK(c.quantile(0.25) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("weights act as multiplicities") {
  const WeightedCdf weighted(std::vector<double>{0, 10}, std::vector<double>{3, 1});
  const WeightedCdf repeated(std::vector<double>{0, 0, 0, 10}, std::vector<double>{1, 1, 1, 1});
  // positions differ (grouped vs split mass) but both put 3/4 of the mass at 0
  CHECK(weighted.quantile(0.3) == 0.0);
  CHECK(repeated.quantile(0.3) == 0.0);
  CHECK(weighted.quantile(0.95) == 10.0);
}

TEST_CASE("zero weights are ignored and order is irrelevant") {
  const WeightedCdf a(std::vector<double>{5, -1, 3, 100}, std::vector<double>{1, 1, 1, 0});
  const WeightedCdf b(std::vector<double>{-1, 3, 5}, std::vector<double>{1, 1, 1});
  CHECK(a.support_size() == 3);
  for (double p : {0.05, 0.3, 0.5, 0.77, 0.99}) CHECK(a.quantile(p) == b.quantile(p));
}

TEST_CASE("uniform weights match the sort-and-interpolate oracle") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 3);
  std::vector<double> v(1000);
  for (double& x : v) x = z(rng);
  const WeightedCdf c(v, std::vector<double>(v.size(), 1.0));
  for (double p = 0.0; p <= 1.0; p += 0.01)
    CHECK(std::abs(c.quantile(p) - testing::midpoint_quantile(v, p)) < 1e-12);
}

TEST_CASE("histogram constructor matches value/weight constructor") {
  const Histogram h({0, 1, 2, 5}, {1, 0, 2, 1});
  const WeightedCdf a(h), b(h.centers(), h.weights());
  const std::vector<double> ps = {0.1, 0.4, 0.8};
  CHECK(a.quantiles(ps) == b.quantiles(ps));
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(WeightedCdf(std::vector<double>{1}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(WeightedCdf(std::vector<double>{1}, std::vector<double>{0}), Error);
  CHECK_THROWS_AS(WeightedCdf(std::vector<double>{1}, std::vector<double>{-1}), Error);
  CHECK_THROWS_AS(WeightedCdf(std::vector<double>{NAN}, std::vector<double>{1}), Error);
}
