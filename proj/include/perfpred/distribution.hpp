#pragma once

#include <optional>
#include <variant>
#include <vector>

namespace perfpred::regression {

struct Gaussian {
  double mu = 0.0;
  double sigma = 1.0;  // > 0
};

struct BetaDist {
  double alpha = 1.0;  // > 0
  double beta = 1.0;   // > 0
};

/// Sample-based law; samples are kept sorted so that quantiles, means and the
/// pairwise CRPS term are order-canonical (permutation invariance is exact).
struct Empirical {
  std::vector<double> samples;
};

struct PointMass {
  double value = 0.0;
};

/// A bare (point, lower, upper) triple with no generative law attached, e.g.
/// parsed from a judge response. `lower`/`upper` are the bounds at the native
/// confidence level 1-alpha (0.95 unless stated otherwise).
struct IntervalOnly {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

using PredictiveDistribution = std::variant<Gaussian, BetaDist, Empirical, PointMass, IntervalOnly>;

/// Validating constructors; invariant violations raise errors.
PredictiveDistribution make_gaussian(double mu, double sigma);
PredictiveDistribution make_beta(double alpha, double beta);
PredictiveDistribution make_empirical(std::vector<double> samples);  // sorts
PredictiveDistribution make_point_mass(double value);
PredictiveDistribution make_interval_only(double point, double lower, double upper);

struct Prediction {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  // anomaly flags + pre-clamp values (kept when reporting-time clamping or a
  // bound swap changed anything)
  bool clamped = false;
  bool bounds_swapped = false;
  bool asymmetric = false;
  bool parse_failed = false;
  std::optional<double> raw_point, raw_lower, raw_upper;
};

double dist_mean(const PredictiveDistribution& dist);

/// Inverse CDF at p in (0,1). Gaussian via the rational-approximation inverse
/// normal CDF; Beta via bisection on the regularized incomplete beta;
/// Empirical via type-7 interpolation; IntervalOnly via its implied Gaussian.
double dist_quantile(const PredictiveDistribution& dist, double p);

/// CDF at x (used by CRPS numeric integration).
double dist_cdf(const PredictiveDistribution& dist, double x);

/// Point estimate = distribution mean, bounds = quantiles at alpha/2 and
/// 1 - alpha/2. IntervalOnly returns its stored triple unchanged.
Prediction central_interval(const PredictiveDistribution& dist, double alpha);

/// Reporting-time clamp to [0,1]; pre-clamp values are retained.
Prediction clamp_unit(const Prediction& pred);

/// Gaussian with the same centre and 95% width; degenerate width gives a
/// PointMass. The implied law behind IntervalOnly.
PredictiveDistribution implied_distribution(const IntervalOnly& iv);

}  // namespace perfpred::regression
