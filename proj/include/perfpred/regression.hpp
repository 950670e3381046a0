#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "perfpred/confidence.hpp"
#include "perfpred/distribution.hpp"

namespace perfpred::regression {

enum class ModelKind { linear, bayesian_ridge, random_forest, beta_regression };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct RegressionOptions {
  int forest_trees = 100;
  int min_samples_leaf = 2;
  double ridge_jitter = 1e-8;
  int bayes_max_iters = 300;
  double bayes_tol = 1e-4;
  int beta_max_iters = 200;
  double beta_grad_tol = 1e-8;
};

struct TrainingMeta {
  size_t n_rows = 0;
  uint64_t seed = 0;
  std::vector<std::string> feature_ids;  // sorted
  bool intercept_only = false;           // degenerate-design fallback engaged
};

class FittedRegressor {
 public:
  virtual ~FittedRegressor() = default;
  virtual ModelKind kind() const = 0;
  const TrainingMeta& meta() const { return meta_; }

  /// Predicts from a feature map; every feature id seen at fit time must be
  /// present (extra ids are ignored). Unknown-at-fit ids raise schema errors.
  PredictiveDistribution predict_distribution(const confidence::FeatureVector& fv) const;

  /// Predicts from a raw row ordered like meta().feature_ids.
  virtual PredictiveDistribution predict_row(const std::vector<double>& x) const = 0;

  /// Versioned, self-describing flat text; doubles as %.17g so a reload is
  /// bit-exact.
  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<FittedRegressor> load(const std::filesystem::path& path);

  virtual void serialize(std::ostream& out) const = 0;

 protected:
  TrainingMeta meta_;
  friend std::unique_ptr<FittedRegressor> deserialize_regressor(std::istream& in);
};

/// Fits p(s | c, theta). All vectors must share one feature-id set; scores
/// must lie in [0,1]; |features| == |scores| >= 2. A design whose feature
/// columns are all constant falls back to an intercept-only model (flagged
/// in TrainingMeta::intercept_only).
std::unique_ptr<FittedRegressor> fit(ModelKind kind,
                                     const std::vector<confidence::FeatureVector>& features,
                                     const std::vector<double>& scores, uint64_t seed,
                                     const RegressionOptions& opts = {});

/// Matrix-level entry point (rows in feature_ids order).
std::unique_ptr<FittedRegressor> fit_matrix(ModelKind kind,
                                            const std::vector<std::vector<double>>& rows,
                                            std::vector<std::string> feature_ids,
                                            const std::vector<double>& scores, uint64_t seed,
                                            const RegressionOptions& opts = {});

/// Smithson-Verkuilen squeeze s' = (s (n-1) + 0.5) / n mapping [0,1] scores
/// into the open interval required by the Beta likelihood.
std::vector<double> squeeze_scores(const std::vector<double>& scores, size_t n);

}  // namespace perfpred::regression
