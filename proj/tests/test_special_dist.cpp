#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "medtest/rng.hpp"
#include "medtest/special_dist.hpp"
#include "oracles.hpp"

using namespace medtest;

TEST_CASE("std_normal_cdf anchor values") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std::fabs(std_normal_cdf(1.959964) - 0.975) < 1e-6);
  CHECK(std::fabs(std_normal_cdf(1.959964) - oracles::normal_cdf_oracle(1.959964)) <
        1e-10);
  const double deep = std_normal_cdf(-38.0);
  CHECK(deep > 0.0);
  CHECK(deep < 1e-300);
  CHECK_THROWS_AS(std_normal_cdf(std::nan("")), std::invalid_argument);
}

TEST_CASE("std_normal_sf complements the cdf without cancellation") {
  for (double x : {-8.0, -2.0, 0.0, 1.0, 5.0, 10.0, 30.0}) {
    CHECK(std::fabs(std_normal_sf(x) + std_normal_cdf(x) - 1.0) < 1e-15);
    CHECK(std_normal_sf(x) > 0.0);
  }
  CHECK(std::fabs(std_normal_two_sided(1.959964) - 0.05) < 1e-6);
}

TEST_CASE("std_normal_quantile anchors and round trip") {
  CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(std_normal_quantile(0.975) - 1.959964) < 1e-5);
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    const double p = std_normal_cdf(x);
    const double back = std_normal_quantile(p);
    // Rounding p to the nearest double near 1 already perturbs the exact
    // quantile by ~ulp(1)/(2 pdf(x)), so bound the round trip by that.
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979324);
    const double representable = 1.2e-16 / pdf;
    CHECK(std::fabs(back - x) < std::max(1e-9, representable));
  }
  for (double p : {1e-12, 1e-6, 0.2, 0.8, 1.0 - 1e-10}) {
    const double x = std_normal_quantile(p);
    CHECK(std::fabs(std_normal_cdf(x) - p) < 1e-12);
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(std_normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("normal_product_tail basics") {
  CHECK(normal_product_tail(0.0, 1.0) == 1.0);
  CHECK(normal_product_tail(2.0, 1.0) < normal_product_tail(1.0, 1.0));
  CHECK(normal_product_tail(-1.0, 1.0) == normal_product_tail(1.0, 1.0));
  CHECK_THROWS_AS(normal_product_tail(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("normal_product_tail matches the quadrature oracle") {
  for (double t : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0})
    for (double scale : {1.0, 1.2, 2.0}) {
      const double got = normal_product_tail(t, scale);
      const double want = oracles::product_tail_oracle(t / scale);
      CHECK(std::fabs(got - want) < 1e-8);
    }
}

TEST_CASE("scale absorbs into the argument") {
  for (double t : {0.05, 0.7, 1.3, 3.0, 9.0})
    for (double s : {0.5, 1.2, 2.0, 4.0})
      CHECK(std::fabs(normal_product_tail(t, s) - normal_product_tail(t / s, 1.0)) <
            1e-12);
}

TEST_CASE("normal_product_tail stays positive deep in the tail") {
  const double p = normal_product_tail(600.0, 1.0);
  CHECK(p > 0.0);
  CHECK(p < 1e-250);
  CHECK(normal_product_tail(2000.0, 1.0) > 0.0);
}

TEST_CASE("empirical law of |Z1 Z2| matches the tail function") {
  Rng rng(99, 0, 0);
  const std::size_t n = 1000000;
  std::size_t hits[3] = {0, 0, 0};
  const double ts[3] = {0.5, 1.0, 2.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = std::fabs(rng.next_normal() * rng.next_normal());
    for (int k = 0; k < 3; ++k) hits[k] += prod >= ts[k] ? 1 : 0;
  }
  for (int k = 0; k < 3; ++k) {
    const double p = normal_product_tail(ts[k], 1.0);
    const double freq = static_cast<double>(hits[k]) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    CHECK(std::fabs(freq - p) <= 3.0 * se);
  }
}

TEST_CASE("mixture two-sided p-value") {
  MixtureNormalRef unit{1.0, 0.0};
  MixtureNormalRef quarter{0.0, 1.0};
  MixtureNormalRef half{0.5, 0.5};
  CHECK(mixture_two_sided_pvalue(0.0, half) == 1.0);
  CHECK(std::fabs(mixture_two_sided_pvalue(1.0, unit) - 0.3173105) < 1e-6);
  CHECK(std::fabs(mixture_two_sided_pvalue(1.0, quarter) - 0.0455003) < 1e-6);
  double prev = 1.0;
  for (double s = 0.1; s <= 6.0; s += 0.1) {
    const double p = mixture_two_sided_pvalue(s, half);
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(mixture_two_sided_pvalue(1.0, MixtureNormalRef{0.7, 0.7}),
                  std::invalid_argument);
}
