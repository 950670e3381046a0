#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perfpred/distribution.hpp"
#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"
#include "perfpred/rng.hpp"

using namespace perfpred;
using namespace perfpred::regression;

TEST_CASE("quantiles per distribution kind") {
  CHECK(dist_quantile(make_beta(1.0, 1.0), 0.5) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(dist_quantile(make_gaussian(0.0, 1.0), 0.975) - 1.959964) < 1e-6);
  CHECK(dist_quantile(make_empirical({1, 2, 3, 4}), 0.5) == doctest::Approx(2.5));
  CHECK(dist_quantile(make_point_mass(0.7), 0.3) == doctest::Approx(0.7));
}

TEST_CASE("quantile is non-decreasing in p for every kind") {
  Rng rng(3);
  std::vector<double> samples;
  for (int i = 0; i < 25; ++i) samples.push_back(rng.uniform01());
  const std::vector<PredictiveDistribution> dists{
      make_gaussian(0.4, 0.2), make_beta(2.5, 1.5), make_empirical(samples),
      make_point_mass(0.3), make_interval_only(0.5, 0.2, 0.9)};
  for (const auto& dist : dists) {
    double prev = -1e9;
    for (int i = 1; i < 100; ++i) {
      const double q = dist_quantile(dist, i / 100.0);
      CHECK(q >= prev - 1e-12);
      prev = q;
    }
  }
}

TEST_CASE("central interval examples") {
  SUBCASE("Gaussian(0.5, 0.1) at alpha 0.05") {
    const auto pred = central_interval(make_gaussian(0.5, 0.1), 0.05);
    CHECK(std::abs(pred.point - 0.5) < 1e-12);
    CHECK(std::abs(pred.lower - 0.3040) < 1e-3);
    CHECK(std::abs(pred.upper - 0.6960) < 1e-3);
  }
  SUBCASE("point mass is degenerate") {
    const auto pred = central_interval(make_point_mass(0.7), 0.05);
    CHECK(pred.point == doctest::Approx(0.7));
    CHECK(pred.lower == doctest::Approx(0.7));
    CHECK(pred.upper == doctest::Approx(0.7));
  }
  SUBCASE("empirical bounds match the type-7 quantile oracle") {
    std::vector<double> ten;
    for (int i = 1; i <= 10; ++i) ten.push_back(0.1 * i);
    const auto pred = central_interval(make_empirical(ten), 0.2);
    CHECK(pred.lower == doctest::Approx(mathx::quantile_type7_sorted(ten, 0.1)).epsilon(1e-12));
    CHECK(pred.upper == doctest::Approx(mathx::quantile_type7_sorted(ten, 0.9)).epsilon(1e-12));
    CHECK(pred.point == doctest::Approx(0.55));
  }
  SUBCASE("interval-only passes through its stored triple") {
    const auto pred = central_interval(make_interval_only(0.7, 0.5, 0.9), 0.05);
    CHECK(pred.point == doctest::Approx(0.7));
    CHECK(pred.lower == doctest::Approx(0.5));
    CHECK(pred.upper == doctest::Approx(0.9));
  }
}

TEST_CASE("interval nesting: smaller alpha gives wider intervals") {
  Rng rng(5);
  std::vector<double> samples;
  for (int i = 0; i < 40; ++i) samples.push_back(rng.normal());
  const std::vector<PredictiveDistribution> dists{make_gaussian(0.2, 0.3), make_beta(3.0, 2.0),
                                                  make_empirical(samples)};
  for (const auto& dist : dists) {
    const auto wide = central_interval(dist, 0.01);
    const auto mid = central_interval(dist, 0.05);
    const auto narrow = central_interval(dist, 0.2);
    CHECK(wide.lower <= mid.lower);
    CHECK(mid.lower <= narrow.lower);
    CHECK(narrow.upper <= mid.upper);
    CHECK(mid.upper <= wide.upper);
    CHECK(wide.lower <= wide.point);
    CHECK(wide.point <= wide.upper);
  }
}

TEST_CASE("clamp_unit keeps pre-clamp values") {
  Prediction raw;
  raw.point = 1.2;
  raw.lower = -0.1;
  raw.upper = 1.4;
  const auto clamped = clamp_unit(raw);
  CHECK(clamped.clamped);
  CHECK(clamped.point == doctest::Approx(1.0));
  CHECK(clamped.lower == doctest::Approx(0.0));
  CHECK(clamped.upper == doctest::Approx(1.0));
  CHECK(*clamped.raw_point == doctest::Approx(1.2));
  CHECK(*clamped.raw_lower == doctest::Approx(-0.1));
  CHECK(*clamped.raw_upper == doctest::Approx(1.4));

  Prediction inside;
  inside.point = 0.5;
  inside.lower = 0.2;
  inside.upper = 0.9;
  const auto untouched = clamp_unit(inside);
  CHECK_FALSE(untouched.clamped);
  CHECK_FALSE(untouched.raw_point.has_value());
}

TEST_CASE("validating constructors") {
  CHECK_THROWS_AS(make_gaussian(0.0, 0.0), Error);
  CHECK_THROWS_AS(make_gaussian(0.0, -1.0), Error);
  CHECK_THROWS_AS(make_beta(0.0, 1.0), Error);
  CHECK_THROWS_AS(make_empirical({}), Error);
  CHECK_THROWS_AS(make_interval_only(0.1, 0.5, 0.9), Error);  // point below lower
  CHECK_THROWS_AS(dist_quantile(make_gaussian(0, 1), 0.0), Error);
}

TEST_CASE("empirical distributions are sample-order canonical") {
  const auto a = make_empirical({0.3, 0.1, 0.9, 0.5});
  const auto b = make_empirical({0.9, 0.5, 0.3, 0.1});
  CHECK(dist_mean(a) == dist_mean(b));
  CHECK(dist_quantile(a, 0.37) == dist_quantile(b, 0.37));
}
