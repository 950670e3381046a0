#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfpred/distribution.hpp"

namespace perfpred::evaluation {

using regression::PredictiveDistribution;

double rmse(const std::vector<double>& points, const std::vector<double>& gold);

/// Sample Pearson correlation. Constant input on either side raises an
/// `undefined` error (the caller reports the cell as missing).
double pearson(const std::vector<double>& points, const std::vector<double>& gold);

/// Continuous ranked probability score of `dist` against the observed truth.
/// Gaussian uses the closed form, Empirical the exact double-sum estimator,
/// PointMass collapses to absolute error, Beta and IntervalOnly integrate the
/// defining integral numerically to 1e-7.
double crps(const PredictiveDistribution& dist, double truth);

/// Fraction of gold values covered by their closed interval [l, u].
double picp(const std::vector<std::pair<double, double>>& intervals,
            const std::vector<double>& gold);

struct AceResult {
  double ace = 0.0;     // |picp - p|
  double signed_gap = 0.0;  // picp - p; negative = over-confident (too narrow)
};

AceResult ace(const std::vector<std::pair<double, double>>& intervals,
              const std::vector<double>& gold, double p = 0.95);

/// Aggregate scores for one (metric, method) cell of the benchmark grid.
struct EvalReport {
  std::string dataset_id;
  std::string metric_id;
  std::string method_id;
  std::string model_kind;  // regressor chosen on dev, empty for judge rows
  size_t n_train = 0;
  size_t n_instances = 0;  // rows actually evaluated
  size_t n_failed = 0;     // rows excluded (missing features / parse failures)
  double rmse = 0.0;
  std::optional<double> pearson;  // missing when correlation is undefined
  double crps_mean = 0.0;
  double picp = 0.0;
  double ace = 0.0;
  double ace_signed = 0.0;
  double nominal_p = 0.95;
};

}  // namespace perfpred::evaluation
