#include "perfpred/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"

namespace perfpred::regression {

namespace {
// z such that P(|Z| <= z) = 0.95 for standard normal Z
constexpr double kZ975 = 1.959964;
}  // namespace

PredictiveDistribution make_gaussian(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
    fail(ErrorKind::numeric, "Gaussian requires finite mu and sigma > 0");
  return Gaussian{mu, sigma};
}

PredictiveDistribution make_beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    fail(ErrorKind::numeric, "Beta requires finite positive parameters");
  return BetaDist{alpha, beta};
}

PredictiveDistribution make_empirical(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorKind::arity, "Empirical requires a non-empty sample");
  for (double s : samples)
    if (!std::isfinite(s)) fail(ErrorKind::numeric, "Empirical sample has non-finite value");
  std::sort(samples.begin(), samples.end());
  return Empirical{std::move(samples)};
}

PredictiveDistribution make_point_mass(double value) {
  if (!std::isfinite(value)) fail(ErrorKind::numeric, "PointMass requires a finite value");
  return PointMass{value};
}

PredictiveDistribution make_interval_only(double point, double lower, double upper) {
  if (!(lower <= point && point <= upper))
    fail(ErrorKind::integrity, "IntervalOnly requires lower <= point <= upper");
  return IntervalOnly{point, lower, upper};
}

double dist_mean(const PredictiveDistribution& dist) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.mu;
        } else if constexpr (std::is_same_v<T, BetaDist>) {
          return d.alpha / (d.alpha + d.beta);
        } else if constexpr (std::is_same_v<T, Empirical>) {
          double s = 0.0;
          for (double x : d.samples) s += x;
          return s / static_cast<double>(d.samples.size());
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return d.value;
        } else {
          return d.point;
        }
      },
      dist);
}

double dist_quantile(const PredictiveDistribution& dist, double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::range, "dist_quantile: p must be in (0,1)");
  return std::visit(
      [p](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.mu + d.sigma * mathx::normal_quantile(p);
        } else if constexpr (std::is_same_v<T, BetaDist>) {
          return mathx::beta_quantile(p, d.alpha, d.beta);
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return mathx::quantile_type7_sorted(d.samples, p);
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return d.value;
        } else {
          return dist_quantile(implied_distribution(d), p);
        }
      },
      dist);
}

double dist_cdf(const PredictiveDistribution& dist, double x) {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return mathx::normal_cdf((x - d.mu) / d.sigma);
        } else if constexpr (std::is_same_v<T, BetaDist>) {
          return mathx::beta_cdf(x, d.alpha, d.beta);
        } else if constexpr (std::is_same_v<T, Empirical>) {
          const auto& s = d.samples;
          const auto it = std::upper_bound(s.begin(), s.end(), x);
          return static_cast<double>(it - s.begin()) / static_cast<double>(s.size());
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return x >= d.value ? 1.0 : 0.0;
        } else {
          return dist_cdf(implied_distribution(d), x);
        }
      },
      dist);
}

Prediction central_interval(const PredictiveDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::range, "interval: alpha must be in (0,1)");
  Prediction pred;
  pred.alpha = alpha;
  if (const auto* iv = std::get_if<IntervalOnly>(&dist)) {
    pred.point = iv->point;
    pred.lower = iv->lower;
    pred.upper = iv->upper;
    return pred;
  }
  if (const auto* pm = std::get_if<PointMass>(&dist)) {
    pred.point = pred.lower = pred.upper = pm->value;
    return pred;
  }
  pred.point = dist_mean(dist);
  pred.lower = dist_quantile(dist, alpha / 2.0);
  pred.upper = dist_quantile(dist, 1.0 - alpha / 2.0);
  return pred;
}

Prediction clamp_unit(const Prediction& pred) {
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
  Prediction out = pred;
  const double p = clamp01(pred.point), l = clamp01(pred.lower), u = clamp01(pred.upper);
  if (p != pred.point || l != pred.lower || u != pred.upper) {
    out.clamped = true;
    out.raw_point = pred.point;
    out.raw_lower = pred.lower;
    out.raw_upper = pred.upper;
    out.point = p;
    out.lower = l;
    out.upper = u;
  }
  return out;
}

PredictiveDistribution implied_distribution(const IntervalOnly& iv) {
  if (iv.upper == iv.lower) return PointMass{iv.point};
  const double sigma = (iv.upper - iv.lower) / (2.0 * kZ975);
  return Gaussian{iv.point, sigma};
}

}  // namespace perfpred::regression
