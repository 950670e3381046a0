#include "perfpred/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"

namespace perfpred::evaluation {

using regression::BetaDist;
using regression::Empirical;
using regression::Gaussian;
using regression::IntervalOnly;
using regression::PointMass;

double rmse(const std::vector<double>& points, const std::vector<double>& gold) {
  if (points.size() != gold.size() || points.empty())
    fail(ErrorKind::arity, "rmse: lengths must match and be non-zero");
  double sq = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    const double d = points[i] - gold[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(points.size()));
}

double pearson(const std::vector<double>& points, const std::vector<double>& gold) {
  if (points.size() != gold.size() || points.size() < 2)
    fail(ErrorKind::arity, "pearson: lengths must match and be >= 2");
  const double mx = mathx::mean(points);
  const double my = mathx::mean(gold);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    const double dx = points[i] - mx;
    const double dy = gold[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    fail(ErrorKind::undefined, "pearson: correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

double crps_gaussian(const Gaussian& g, double truth) {
  const double z = (truth - g.mu) / g.sigma;
  return g.sigma * (z * (2.0 * mathx::normal_cdf(z) - 1.0) + 2.0 * mathx::normal_pdf(z) -
                    1.0 / std::sqrt(3.14159265358979323846));
}

/// Exact estimator mean|X_i - q| - (1/(2 T^2)) sum_ij |X_i - X_j| over the
/// sorted sample; sorting makes the result independent of sample order.
double crps_empirical(const Empirical& e, double truth) {
  const auto& x = e.samples;  // sorted by construction
  const double t = static_cast<double>(x.size());
  double abs_term = 0.0;
  for (double xi : x) abs_term += std::abs(xi - truth);
  abs_term /= t;
  double pair_term = 0.0;
  for (double xi : x)
    for (double xj : x) pair_term += std::abs(xi - xj);
  return abs_term - pair_term / (2.0 * t * t);
}

/// Integral of (F(x) - 1{x >= q})^2 dx over [a, b] plus the exact unit-mass
/// tails when the truth lies outside the integration window. The integrand
/// jumps at the truth, so the two smooth halves are integrated separately.
double crps_numeric(const PredictiveDistribution& dist, double truth, double a, double b) {
  auto below = [&](double x) {
    const double f = regression::dist_cdf(dist, x);
    return f * f;
  };
  auto above = [&](double x) {
    const double f = 1.0 - regression::dist_cdf(dist, x);
    return f * f;
  };
  double total = 0.0;
  if (truth < a) total += a - truth;  // F ~= 0 below a, step = 1 on [truth, a)
  if (truth > b) total += truth - b;  // F ~= 1 above b, step = 0 on (b, truth]
  const double split = std::clamp(truth, a, b);
  total += mathx::integrate_adaptive_simpson(below, a, split, 5e-8);
  total += mathx::integrate_adaptive_simpson(above, split, b, 5e-8);
  return total;
}

}  // namespace

double crps(const PredictiveDistribution& dist, double truth) {
  if (!std::isfinite(truth)) fail(ErrorKind::numeric, "crps: non-finite truth");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return crps_gaussian(d, truth);
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return crps_empirical(d, truth);
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return std::abs(d.value - truth);
        } else if constexpr (std::is_same_v<T, BetaDist>) {
          // Beta support is [0,1]; the integrand vanishes outside except for
          // the step contribution when truth leaves the unit interval
          return crps_numeric(dist, truth, 0.0, 1.0);
        } else {  // IntervalOnly: integrate the implied distribution
          const auto implied = regression::implied_distribution(d);
          if (std::holds_alternative<PointMass>(implied))
            return std::abs(std::get<PointMass>(implied).value - truth);
          const auto& g = std::get<Gaussian>(implied);
          const double a = std::min(g.mu - 10.0 * g.sigma, truth);
          const double b = std::max(g.mu + 10.0 * g.sigma, truth);
          return crps_numeric(implied, truth, a, b);
        }
      },
      dist);
}

double picp(const std::vector<std::pair<double, double>>& intervals,
            const std::vector<double>& gold) {
  if (intervals.size() != gold.size() || intervals.empty())
    fail(ErrorKind::arity, "picp: lengths must match and be non-zero");
  size_t covered = 0;
  for (size_t i = 0; i < gold.size(); ++i)
    if (intervals[i].first <= gold[i] && gold[i] <= intervals[i].second) ++covered;
  return static_cast<double>(covered) / static_cast<double>(gold.size());
}

AceResult ace(const std::vector<std::pair<double, double>>& intervals,
              const std::vector<double>& gold, double p) {
  const double coverage = picp(intervals, gold);
  AceResult out;
  out.signed_gap = coverage - p;
  out.ace = std::abs(out.signed_gap);
  return out;
}

}  // namespace perfpred::evaluation
