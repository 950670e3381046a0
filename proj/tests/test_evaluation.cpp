#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "perfpred/error.hpp"
#include "perfpred/evaluation.hpp"
#include "perfpred/mathx.hpp"
#include "perfpred/rng.hpp"

using namespace perfpred;
using namespace perfpred::evaluation;
using regression::make_beta;
using regression::make_empirical;
using regression::make_gaussian;
using regression::make_interval_only;
using regression::make_point_mass;

namespace {

/// Composite-Simpson oracle for the defining CRPS integral, refined until two
/// consecutive grids agree. The integrand jumps at the truth, so the smooth
/// halves are integrated separately. Independent of the adaptive integrator
/// and the closed forms in the library.
double crps_integral_oracle(const std::function<double(double)>& cdf, double truth, double lo,
                            double hi) {
  auto refine = [](const std::function<double(double)>& f, double a, double b) {
    if (a >= b) return 0.0;
    auto simpson = [&](int n) {
      const double h = (b - a) / n;
      double acc = f(a) + f(b);
      for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
      return acc * h / 3.0;
    };
    double prev = simpson(512), cur = simpson(1024);
    for (int n = 2048; n <= 1 << 20 && std::abs(cur - prev) > 1e-10; n *= 2) {
      prev = cur;
      cur = simpson(n);
    }
    return cur;
  };
  const double split = std::clamp(truth, lo, hi);
  double total = 0.0;
  if (truth < lo) total += lo - truth;
  if (truth > hi) total += truth - hi;
  total += refine([&](double x) { const double f = cdf(x); return f * f; }, lo, split);
  total += refine([&](double x) { const double f = 1.0 - cdf(x); return f * f; }, split, hi);
  return total;
}

double gaussian_cdf(double mu, double sigma, double x) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

}  // namespace

TEST_CASE("rmse hand cases") {
  CHECK(rmse({0.5, 0.5}, {0.0, 1.0}) == doctest::Approx(0.5));
  CHECK(rmse({0.3, 0.6}, {0.3, 0.6}) == doctest::Approx(0.0));
  CHECK(rmse({0.2}, {0.6}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(rmse({0.1}, {0.1, 0.2}), Error);
}

TEST_CASE("pearson hand cases and the undefined contract") {
  CHECK(pearson({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  try {
    pearson({1, 2, 3}, {2, 2, 2});
    FAIL("expected undefined-correlation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::undefined);
  }
}

TEST_CASE("CRPS of a point mass is the absolute error") {
  CHECK(crps(make_point_mass(0.8), 0.5) == doctest::Approx(0.3));
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double v = rng.uniform01();
    const double q = rng.uniform01();
    CHECK(crps(make_point_mass(v), q) == std::abs(v - q));
  }
}

TEST_CASE("Gaussian CRPS closed form matches frozen and integral oracles") {
  // numeric-integration oracle of the defining integral
  CHECK(std::abs(crps(make_gaussian(0.0, 1.0), 0.0) - 0.23370) < 1e-4);
  for (double mu : {-1.0, 0.0, 1.0})
    for (double sigma : {0.05, 0.5, 2.0})
      for (double truth : {-2.0, -0.3, 0.0, 0.7, 2.0}) {
        const double closed = crps(make_gaussian(mu, sigma), truth);
        const double lo = std::min(mu - 12 * sigma, truth - 1.0);
        const double hi = std::max(mu + 12 * sigma, truth + 1.0);
        const double oracle = crps_integral_oracle(
            [&](double x) { return gaussian_cdf(mu, sigma, x); }, truth, lo, hi);
        CHECK(std::abs(closed - oracle) < 1e-6);
      }
}

TEST_CASE("empirical CRPS equals the brute-force double sum exactly") {
  CHECK(crps(make_empirical({0.0, 1.0}), 0.5) == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t t = 2 + rng.below(49);  // T <= 50
    std::vector<double> samples;
    for (size_t i = 0; i < t; ++i) samples.push_back(rng.uniform01());
    const double truth = rng.uniform01();

    // brute force on the sorted sample (the canonical order of Empirical)
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    double abs_term = 0.0;
    for (double x : sorted) abs_term += std::abs(x - truth);
    abs_term /= static_cast<double>(t);
    double pair_term = 0.0;
    for (double a : sorted)
      for (double b : sorted) pair_term += std::abs(a - b);
    const double oracle = abs_term - pair_term / (2.0 * t * t);

    CHECK(crps(make_empirical(samples), truth) == oracle);
  }
}

TEST_CASE("empirical CRPS is invariant under sample permutation") {
  std::vector<double> base{0.12, 0.5, 0.33, 0.9, 0.7, 0.01};
  Rng rng(4);
  const double v = crps(make_empirical(base), 0.4);
  for (int i = 0; i < 10; ++i) {
    rng.shuffle(base);
    CHECK(crps(make_empirical(base), 0.4) == v);
  }
}

TEST_CASE("empirical CRPS agrees with the defining integral") {
  std::vector<double> samples{0.1, 0.25, 0.55, 0.55, 0.8};
  const auto dist = make_empirical(samples);
  const double oracle = crps_integral_oracle(
      [&](double x) { return regression::dist_cdf(dist, x); }, 0.4, -0.5, 1.5);
  CHECK(std::abs(crps(dist, 0.4) - oracle) < 1e-7);
}

TEST_CASE("Beta CRPS matches the integral oracle") {
  for (const auto& [a, b, truth] : std::vector<std::tuple<double, double, double>>{
           {2.0, 5.0, 0.3}, {0.7, 0.7, 0.5}, {8.0, 2.0, 0.9}, {3.0, 3.0, 0.05}}) {
    const double got = crps(make_beta(a, b), truth);
    const double oracle = crps_integral_oracle(
        [&, a = a, b = b](double x) { return mathx::beta_cdf(x, a, b); }, truth, 0.0, 1.0);
    CHECK(std::abs(got - oracle) < 1e-6);
  }
}

TEST_CASE("interval-only CRPS goes through the implied distribution") {
  // implied Gaussian, numerically integrated
  const double got = crps(make_interval_only(0.7, 0.5, 0.9), 0.6);
  const double sigma = 0.4 / (2.0 * 1.959964);
  const double oracle = crps_integral_oracle(
      [&](double x) { return gaussian_cdf(0.7, sigma, x); }, 0.6, 0.7 - 12 * sigma,
      0.7 + 12 * sigma);
  CHECK(std::abs(got - oracle) < 1e-6);
  // degenerate interval collapses to absolute error
  CHECK(crps(make_interval_only(0.7, 0.7, 0.7), 0.5) == doctest::Approx(0.2));
}

TEST_CASE("CRPS propriety smoke check: minimized at the truth") {
  const double truth = 0.42;
  const double at_truth = crps(make_gaussian(truth, 0.2), truth);
  for (double mu : {0.0, 0.2, 0.6, 1.0})
    CHECK(at_truth <= crps(make_gaussian(mu, 0.2), truth) + 1e-12);
}

TEST_CASE("picp and ace") {
  std::vector<std::pair<double, double>> intervals;
  std::vector<double> gold;
  for (int i = 0; i < 20; ++i) {
    intervals.emplace_back(0.0, 1.0);
    gold.push_back(0.5);
  }
  gold[7] = 1.5;  // one miss
  CHECK(picp(intervals, gold) == doctest::Approx(0.95));

  SUBCASE("boundary counts as covered") {
    CHECK(picp({{0.2, 0.8}}, {0.8}) == doctest::Approx(1.0));
    CHECK(picp({{0.2, 0.8}}, {0.2}) == doctest::Approx(1.0));
  }
  SUBCASE("ace examples") {
    const auto at_nominal = ace(intervals, gold, 0.95);
    CHECK(at_nominal.ace == doctest::Approx(0.0));
    CHECK(at_nominal.signed_gap == doctest::Approx(0.0));

    std::vector<double> all_in(20, 0.5);
    const auto under = ace(intervals, all_in, 0.95);
    CHECK(under.ace == doctest::Approx(0.05));
    CHECK(under.signed_gap == doctest::Approx(0.05));  // under-confident

    std::vector<std::pair<double, double>> narrow(100, {0.4, 0.6});
    std::vector<double> spread;
    for (int i = 0; i < 100; ++i) spread.push_back(i < 79 ? 0.5 : 0.99);
    const auto over = ace(narrow, spread, 0.95);
    CHECK(over.ace == doctest::Approx(0.16));
    CHECK(over.signed_gap == doctest::Approx(-0.16));  // over-confident
  }
}

TEST_CASE("ACE is capped: over-coverage penalty at most 1-p") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.below(30);
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> gold;
    for (size_t i = 0; i < n; ++i) {
      const double lo = rng.uniform01() * 0.5;
      intervals.emplace_back(lo, lo + rng.uniform01() * 0.5);
      gold.push_back(rng.uniform01());
    }
    const double p = 0.95;
    const auto result = ace(intervals, gold, p);
    CHECK(result.ace <= std::max(p, 1.0 - p) + 1e-12);
    if (result.signed_gap > 0) CHECK(result.signed_gap <= 1.0 - p + 1e-12);
  }
}
