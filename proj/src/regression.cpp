#include "perfpred/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"
#include "perfpred/rng.hpp"

namespace perfpred::regression {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "linear";
    case ModelKind::bayesian_ridge: return "bayesian_ridge";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::beta_regression: return "beta_regression";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "linear") return ModelKind::linear;
  if (name == "bayesian_ridge") return ModelKind::bayesian_ridge;
  if (name == "random_forest") return ModelKind::random_forest;
  if (name == "beta_regression") return ModelKind::beta_regression;
  fail(ErrorKind::config, "unknown model kind '" + name + "'");
}

std::vector<double> squeeze_scores(const std::vector<double>& scores, size_t n) {
  if (n == 0) fail(ErrorKind::size, "squeeze_scores: n must be positive");
  std::vector<double> out;
  out.reserve(scores.size());
  const double dn = static_cast<double>(n);
  for (double s : scores) out.push_back((s * (dn - 1.0) + 0.5) / dn);
  return out;
}

PredictiveDistribution FittedRegressor::predict_distribution(
    const confidence::FeatureVector& fv) const {
  std::vector<double> x;
  x.reserve(meta_.feature_ids.size());
  for (const auto& id : meta_.feature_ids) {
    const auto it = fv.features.find(id);
    if (it == fv.features.end())
      fail(ErrorKind::schema, "feature '" + id + "' required by the model is missing");
    x.push_back(it->second);
  }
  return predict_row(x);
}

// ---------------------------------------------------------------------------
// linear: ordinary least squares with ridge jitter; Gaussian prediction
// intervals sigma^2 (1 + x' (X'X + eI)^-1 x)
// ---------------------------------------------------------------------------

class LinearModel final : public FittedRegressor {
 public:
  ModelKind kind() const override { return ModelKind::linear; }

  static std::unique_ptr<LinearModel> fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                          TrainingMeta meta, const RegressionOptions& opts) {
    auto model = std::make_unique<LinearModel>();
    model->meta_ = std::move(meta);
    const Eigen::Index n = x.rows(), d = x.cols();
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += opts.ridge_jitter;
    model->xtx_inv_ = a.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    model->coef_ = model->xtx_inv_ * (x.transpose() * y);
    const double rss = (y - x * model->coef_).squaredNorm();
    const double dof = std::max<double>(1.0, static_cast<double>(n - d));
    model->sigma2_ = std::max(rss / dof, 1e-12);
    return model;
  }

  PredictiveDistribution predict_row(const std::vector<double>& xraw) const override {
    Eigen::VectorXd x(coef_.size());
    x(0) = 1.0;
    for (Eigen::Index j = 1; j < x.size(); ++j) x(j) = xraw[static_cast<size_t>(j - 1)];
    const double mu = coef_.dot(x);
    const double var = sigma2_ * (1.0 + x.dot(xtx_inv_ * x));
    return make_gaussian(mu, std::sqrt(std::max(var, 1e-24)));
  }

  void serialize(std::ostream& out) const override {
    const Eigen::Index d = coef_.size();
    out << "d " << d << "\n";
    out << "coef";
    for (Eigen::Index i = 0; i < d; ++i) out << ' ' << fmt_double(coef_(i));
    out << "\nsigma2 " << fmt_double(sigma2_) << "\nxtx_inv";
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out << ' ' << fmt_double(xtx_inv_(i, j));
    out << "\n";
  }

  Eigen::VectorXd coef_;     // [intercept, slopes...]
  Eigen::MatrixXd xtx_inv_;  // (X'X + eI)^-1
  double sigma2_ = 1e-12;
};

// ---------------------------------------------------------------------------
// bayesian_ridge: conjugate Gaussian, hyperparameters by evidence
// maximization (MacKay updates) on centered data; predictive variance is
// noise variance + x' Sigma x
// ---------------------------------------------------------------------------

class BayesianRidgeModel final : public FittedRegressor {
 public:
  ModelKind kind() const override { return ModelKind::bayesian_ridge; }

  static std::unique_ptr<BayesianRidgeModel> fit(const Eigen::MatrixXd& xr,
                                                 const Eigen::VectorXd& y, TrainingMeta meta,
                                                 const RegressionOptions& opts) {
    auto model = std::make_unique<BayesianRidgeModel>();
    model->meta_ = std::move(meta);
    const Eigen::Index n = xr.rows(), d = xr.cols();
    model->x_mean_ = xr.colwise().mean();
    model->y_mean_ = y.mean();
    const Eigen::MatrixXd xc = xr.rowwise() - model->x_mean_.transpose();
    const Eigen::VectorXd yc = y.array() - model->y_mean_;

    if (d == 0) {
      const double rss = yc.squaredNorm();
      model->noise_precision_ = std::max<double>(1.0, static_cast<double>(n - 1)) /
                                std::max(rss, 1e-12);
      model->weight_precision_ = 1.0;
      model->coef_ = Eigen::VectorXd();
      model->sigma_ = Eigen::MatrixXd();
      return model;
    }

    const Eigen::MatrixXd xtx = xc.transpose() * xc;
    const Eigen::VectorXd xty = xc.transpose() * yc;

    double alpha = 1.0;
    double var_y = yc.squaredNorm() / std::max<double>(1.0, static_cast<double>(n - 1));
    double beta = 1.0 / std::max(var_y, 1e-12);

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    for (int iter = 0; iter < opts.bayes_max_iters; ++iter) {
      Eigen::MatrixXd a = beta * xtx;
      a.diagonal().array() += alpha;
      sigma = a.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
      const Eigen::VectorXd mu_new = beta * (sigma * xty);

      const double gamma =
          static_cast<double>(d) - alpha * sigma.trace();
      const double rss = (yc - xc * mu_new).squaredNorm();
      alpha = std::clamp(gamma / std::max(mu_new.squaredNorm(), 1e-12), 1e-10, 1e10);
      beta = std::clamp((static_cast<double>(n) - gamma) / std::max(rss, 1e-12), 1e-10, 1e12);

      const double delta = (mu_new - mu).cwiseAbs().maxCoeff();
      mu = mu_new;
      if (delta < opts.bayes_tol && iter > 0) break;
    }
    // final posterior at the converged hyperparameters
    Eigen::MatrixXd a = beta * xtx;
    a.diagonal().array() += alpha;
    sigma = a.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    mu = beta * (sigma * xty);

    model->coef_ = mu;
    model->sigma_ = sigma;
    model->weight_precision_ = alpha;
    model->noise_precision_ = beta;
    return model;
  }

  PredictiveDistribution predict_row(const std::vector<double>& xraw) const override {
    const Eigen::Index d = coef_.size();
    double mu = y_mean_;
    double var = 1.0 / noise_precision_;
    if (d > 0) {
      Eigen::VectorXd xc(d);
      for (Eigen::Index j = 0; j < d; ++j) xc(j) = xraw[static_cast<size_t>(j)] - x_mean_(j);
      mu += coef_.dot(xc);
      var += xc.dot(sigma_ * xc);
    }
    return make_gaussian(mu, std::sqrt(std::max(var, 1e-24)));
  }

  void serialize(std::ostream& out) const override {
    const Eigen::Index d = coef_.size();
    out << "d " << d << "\n";
    out << "x_mean";
    for (Eigen::Index i = 0; i < d; ++i) out << ' ' << fmt_double(x_mean_(i));
    out << "\ny_mean " << fmt_double(y_mean_) << "\ncoef";
    for (Eigen::Index i = 0; i < d; ++i) out << ' ' << fmt_double(coef_(i));
    out << "\nsigma";
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out << ' ' << fmt_double(sigma_(i, j));
    out << "\nalpha " << fmt_double(weight_precision_) << "\nbeta "
        << fmt_double(noise_precision_) << "\n";
  }

  Eigen::VectorXd x_mean_;
  double y_mean_ = 0.0;
  Eigen::VectorXd coef_;
  Eigen::MatrixXd sigma_;
  double weight_precision_ = 1.0;  // alpha
  double noise_precision_ = 1.0;   // beta
};

// ---------------------------------------------------------------------------
// random_forest: bagged variance-reduction trees; predictive distribution is
// the empirical law of per-tree leaf means
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class RandomForestModel final : public FittedRegressor {
 public:
  ModelKind kind() const override { return ModelKind::random_forest; }

  static std::unique_ptr<RandomForestModel> fit(const std::vector<std::vector<double>>& rows,
                                                const std::vector<double>& y, TrainingMeta meta,
                                                const RegressionOptions& opts) {
    auto model = std::make_unique<RandomForestModel>();
    model->meta_ = std::move(meta);
    const size_t n = rows.size();
    model->trees_.resize(opts.forest_trees);
    for (int t = 0; t < opts.forest_trees; ++t) {
      Rng rng(derive_seed(model->meta_.seed, "tree/" + std::to_string(t)));
      std::vector<size_t> idx(n);
      for (auto& i : idx) i = static_cast<size_t>(rng.below(n));
      std::sort(idx.begin(), idx.end());  // canonical bootstrap order
      build_node(model->trees_[t], rows, y, idx, opts.min_samples_leaf);
    }
    return model;
  }

  PredictiveDistribution predict_row(const std::vector<double>& x) const override {
    std::vector<double> values;
    values.reserve(trees_.size());
    for (const auto& tree : trees_) {
      int node = 0;
      while (tree[node].feature >= 0)
        node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
      values.push_back(tree[node].value);
    }
    return make_empirical(std::move(values));
  }

  void serialize(std::ostream& out) const override {
    out << "trees " << trees_.size() << "\n";
    for (size_t t = 0; t < trees_.size(); ++t) {
      out << "tree " << t << ' ' << trees_[t].size() << "\n";
      for (const auto& node : trees_[t])
        out << node.feature << ' ' << fmt_double(node.threshold) << ' ' << node.left << ' '
            << node.right << ' ' << fmt_double(node.value) << "\n";
    }
  }

  std::vector<std::vector<TreeNode>> trees_;

 private:
  static int build_node(std::vector<TreeNode>& tree, const std::vector<std::vector<double>>& rows,
                        const std::vector<double>& y, const std::vector<size_t>& idx,
                        int min_leaf) {
    const int node_id = static_cast<int>(tree.size());
    tree.emplace_back();

    double sum = 0.0;
    for (size_t i : idx) sum += y[i];
    const double node_mean = sum / static_cast<double>(idx.size());
    tree[node_id].value = node_mean;

    const size_t n = idx.size();
    if (n < 2 * static_cast<size_t>(min_leaf)) return node_id;
    bool pure = true;
    for (size_t i : idx)
      if (y[i] != y[idx[0]]) {
        pure = false;
        break;
      }
    if (pure) return node_id;

    const size_t d = rows[idx[0]].size();
    int best_feature = -1;
    size_t best_pos = 0;
    double best_threshold = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<size_t> sorted(idx);
    std::vector<size_t> best_sorted;

    for (size_t f = 0; f < d; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
        return rows[a][f] < rows[b][f];
      });
      // prefix sums over the sorted order
      double left_sum = 0.0, left_sq = 0.0;
      double total_sum = 0.0, total_sq = 0.0;
      for (size_t i : sorted) {
        total_sum += y[i];
        total_sq += y[i] * y[i];
      }
      for (size_t k = 1; k < n; ++k) {
        const double yv = y[sorted[k - 1]];
        left_sum += yv;
        left_sq += yv * yv;
        if (k < static_cast<size_t>(min_leaf) || n - k < static_cast<size_t>(min_leaf)) continue;
        const double xl = rows[sorted[k - 1]][f];
        const double xr = rows[sorted[k]][f];
        if (!(xl < xr)) continue;  // splits only between distinct values
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double cost = (left_sq - left_sum * left_sum / static_cast<double>(k)) +
                            (right_sq - right_sum * right_sum / static_cast<double>(n - k));
        if (cost < best_cost) {
          best_cost = cost;
          best_feature = static_cast<int>(f);
          best_pos = k;
          best_threshold = 0.5 * (xl + xr);
          best_sorted = sorted;
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<size_t> left_idx(best_sorted.begin(), best_sorted.begin() + best_pos);
    std::vector<size_t> right_idx(best_sorted.begin() + best_pos, best_sorted.end());
    tree[node_id].feature = best_feature;
    tree[node_id].threshold = best_threshold;
    const int left = build_node(tree, rows, y, left_idx, min_leaf);
    tree[node_id].left = left;
    const int right = build_node(tree, rows, y, right_idx, min_leaf);
    tree[node_id].right = right;
    return node_id;
  }
};

// ---------------------------------------------------------------------------
// beta_regression: logit mean link, constant precision phi, joint MLE by
// Fisher-scoring Newton steps with backtracking; predictive law
// Beta(mu phi, (1-mu) phi)
// ---------------------------------------------------------------------------

class BetaRegressionModel final : public FittedRegressor {
 public:
  ModelKind kind() const override { return ModelKind::beta_regression; }

  static std::unique_ptr<BetaRegressionModel> fit(const Eigen::MatrixXd& x,
                                                  const std::vector<double>& scores,
                                                  TrainingMeta meta,
                                                  const RegressionOptions& opts) {
    auto model = std::make_unique<BetaRegressionModel>();
    model->meta_ = std::move(meta);
    const Eigen::Index n = x.rows(), d = x.cols();

    const auto squeezed = squeeze_scores(scores, scores.size());
    Eigen::VectorXd ystar(n);
    for (Eigen::Index i = 0; i < n; ++i)
      ystar(i) = std::log(squeezed[static_cast<size_t>(i)] /
                          (1.0 - squeezed[static_cast<size_t>(i)]));

    // init: OLS on the logit scale; phi from the delta-method variance
    Eigen::MatrixXd a0 = x.transpose() * x;
    a0.diagonal().array() += opts.ridge_jitter;
    Eigen::VectorXd beta = a0.ldlt().solve(x.transpose() * ystar);
    double phi = 10.0;
    {
      const Eigen::VectorXd resid = ystar - x * beta;
      const double v = resid.squaredNorm() / std::max<double>(1.0, static_cast<double>(n - d));
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = sigmoid(x.row(i).dot(beta));
        acc += 1.0 / std::max(v * mu * (1.0 - mu), 1e-8);
      }
      phi = std::clamp(acc / static_cast<double>(n) - 1.0, 0.5, 1e6);
    }
    double logphi = std::log(phi);

    const double logphi_min = std::log(1e-3), logphi_max = std::log(1e8);
    auto loglik = [&](const Eigen::VectorXd& b, double lp) {
      const double ph = std::exp(lp);
      double ll = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = sigmoid(x.row(i).dot(b));
        const double s = squeezed[static_cast<size_t>(i)];
        ll += std::lgamma(ph) - std::lgamma(mu * ph) - std::lgamma((1.0 - mu) * ph) +
              (mu * ph - 1.0) * std::log(s) + ((1.0 - mu) * ph - 1.0) * std::log(1.0 - s);
      }
      return ll;
    };

    double ll = loglik(beta, logphi);
    for (int iter = 0; iter < opts.beta_max_iters; ++iter) {
      const double ph = std::exp(logphi);
      Eigen::VectorXd score(d + 1);
      score.setZero();
      Eigen::MatrixXd info(d + 1, d + 1);
      info.setZero();
      double score_phi = 0.0, k_phiphi = 0.0;
      Eigen::VectorXd k_betaphi = Eigen::VectorXd::Zero(d);

      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = sigmoid(x.row(i).dot(beta));
        const double s = squeezed[static_cast<size_t>(i)];
        const double t = mu * (1.0 - mu);  // dmu/deta for the logit link
        const double psi_mu = boost::math::digamma(mu * ph);
        const double psi_1mu = boost::math::digamma((1.0 - mu) * ph);
        const double mustar = psi_mu - psi_1mu;
        const double ys = std::log(s / (1.0 - s));
        const double tri_mu = boost::math::trigamma(mu * ph);
        const double tri_1mu = boost::math::trigamma((1.0 - mu) * ph);

        score.head(d) += ph * t * (ys - mustar) * x.row(i).transpose();
        score_phi += mu * (ys - mustar) + std::log(1.0 - s) - psi_1mu +
                     boost::math::digamma(ph);

        const double w = ph * ph * (tri_mu + tri_1mu) * t * t;
        info.topLeftCorner(d, d) += w * x.row(i).transpose() * x.row(i);
        k_betaphi += ph * t * (tri_mu * mu - tri_1mu * (1.0 - mu)) * x.row(i).transpose();
        k_phiphi += tri_mu * mu * mu + tri_1mu * (1.0 - mu) * (1.0 - mu) -
                    boost::math::trigamma(ph);
      }
      // switch to log-phi coordinates
      score(d) = ph * score_phi;
      info.block(0, d, d, 1) = ph * k_betaphi;
      info.block(d, 0, 1, d) = ph * k_betaphi.transpose();
      info(d, d) = ph * ph * k_phiphi;

      if (score.norm() < opts.beta_grad_tol) break;

      info.diagonal().array() += 1e-10;
      Eigen::VectorXd delta = info.ldlt().solve(score);
      if (!delta.allFinite()) delta = score;  // fall back to the gradient

      double step = 1.0;
      bool improved = false;
      for (int half = 0; half < 30; ++half) {
        const Eigen::VectorXd b_try = beta + step * delta.head(d);
        const double lp_try = std::clamp(logphi + step * delta(d), logphi_min, logphi_max);
        const double ll_try = loglik(b_try, lp_try);
        if (std::isfinite(ll_try) && ll_try > ll) {
          beta = b_try;
          logphi = lp_try;
          ll = ll_try;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;  // numerically at the optimum
    }

    model->coef_ = beta;
    model->phi_ = std::exp(logphi);
    return model;
  }

  PredictiveDistribution predict_row(const std::vector<double>& xraw) const override {
    double eta = coef_(0);
    for (Eigen::Index j = 1; j < coef_.size(); ++j) eta += coef_(j) * xraw[static_cast<size_t>(j - 1)];
    const double mu = sigmoid(eta);
    return make_beta(mu * phi_, (1.0 - mu) * phi_);
  }

  void serialize(std::ostream& out) const override {
    out << "d " << coef_.size() << "\ncoef";
    for (Eigen::Index i = 0; i < coef_.size(); ++i) out << ' ' << fmt_double(coef_(i));
    out << "\nphi " << fmt_double(phi_) << "\n";
  }

  Eigen::VectorXd coef_;  // [intercept, slopes...]
  double phi_ = 1.0;
};

// ---------------------------------------------------------------------------
// fitting entry points
// ---------------------------------------------------------------------------

std::unique_ptr<FittedRegressor> fit_matrix(ModelKind kind,
                                            const std::vector<std::vector<double>>& rows,
                                            std::vector<std::string> feature_ids,
                                            const std::vector<double>& scores, uint64_t seed,
                                            const RegressionOptions& opts) {
  if (rows.size() != scores.size())
    fail(ErrorKind::arity, "fit: features and scores must have equal length");
  if (rows.size() < 2) fail(ErrorKind::size, "fit: need at least 2 training rows");
  const size_t d_in = feature_ids.size();
  for (const auto& row : rows)
    if (row.size() != d_in) fail(ErrorKind::schema, "fit: ragged feature rows");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorKind::numeric, "fit: non-finite score");
    if (s < 0.0 || s > 1.0) fail(ErrorKind::range, "fit: scores must lie in [0,1]");
  }
  for (const auto& row : rows)
    for (double v : row)
      if (!std::isfinite(v)) fail(ErrorKind::numeric, "fit: non-finite feature value");

  // degenerate design: every feature column constant
  bool degenerate = true;
  for (size_t j = 0; j < d_in && degenerate; ++j)
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i][j] != rows[0][j]) {
        degenerate = false;
        break;
      }
  if (d_in == 0) degenerate = true;

  TrainingMeta meta;
  meta.n_rows = rows.size();
  meta.seed = seed;
  meta.feature_ids = std::move(feature_ids);
  meta.intercept_only = degenerate;

  const size_t d_used = degenerate ? 0 : d_in;
  const size_t n = rows.size();

  Eigen::VectorXd y(n);
  for (size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = scores[i];

  switch (kind) {
    case ModelKind::linear: {
      Eigen::MatrixXd x(n, d_used + 1);
      x.col(0).setOnes();
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d_used; ++j)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = rows[i][j];
      return LinearModel::fit(x, y, std::move(meta), opts);
    }
    case ModelKind::bayesian_ridge: {
      Eigen::MatrixXd x(n, d_used);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d_used; ++j)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      return BayesianRidgeModel::fit(x, y, std::move(meta), opts);
    }
    case ModelKind::random_forest:
      return RandomForestModel::fit(degenerate ? std::vector<std::vector<double>>(n) : rows,
                                    scores, std::move(meta), opts);
    case ModelKind::beta_regression: {
      Eigen::MatrixXd x(n, d_used + 1);
      x.col(0).setOnes();
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d_used; ++j)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = rows[i][j];
      return BetaRegressionModel::fit(x, scores, std::move(meta), opts);
    }
  }
  fail(ErrorKind::config, "unreachable model kind");
}

std::unique_ptr<FittedRegressor> fit(ModelKind kind,
                                     const std::vector<confidence::FeatureVector>& features,
                                     const std::vector<double>& scores, uint64_t seed,
                                     const RegressionOptions& opts) {
  if (features.size() != scores.size())
    fail(ErrorKind::arity, "fit: features and scores must have equal length");
  if (features.size() < 2) fail(ErrorKind::size, "fit: need at least 2 training rows");

  std::vector<std::string> ids;
  for (const auto& [id, _] : features[0].features) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const auto& fv : features) {
    if (fv.features.size() != ids.size())
      fail(ErrorKind::schema, "fit: inconsistent feature ids across rows");
    for (const auto& id : ids)
      if (!fv.features.count(id))
        fail(ErrorKind::schema, "fit: row missing feature '" + id + "'");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(features.size());
  for (const auto& fv : features) {
    std::vector<double> row;
    row.reserve(ids.size());
    for (const auto& id : ids) row.push_back(fv.features.at(id));
    rows.push_back(std::move(row));
  }
  return fit_matrix(kind, rows, ids, scores, seed, opts);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "perfpred-model v1";

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::parse, "model file truncated, expected " + key);
  if (line.rfind(key, 0) != 0)
    fail(ErrorKind::parse, "model file: expected '" + key + "', got '" + line + "'");
  return line.size() > key.size() + 1 ? line.substr(key.size() + 1) : std::string{};
}

}  // namespace

void FittedRegressor::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << kMagic << "\n";
  out << "kind " << model_kind_name(kind()) << "\n";
  out << "seed " << meta_.seed << "\n";
  out << "rows " << meta_.n_rows << "\n";
  out << "intercept_only " << (meta_.intercept_only ? 1 : 0) << "\n";
  out << "features " << meta_.feature_ids.size();
  for (const auto& id : meta_.feature_ids) out << ' ' << id;
  out << "\n";
  serialize(out);
  out << "end\n";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorKind::io, "cannot write model file " + path.string());
  file << out.str();
}

std::unique_ptr<FittedRegressor> deserialize_regressor(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line != kMagic) fail(ErrorKind::parse, "not a model file (bad magic)");
  const std::string kind_name = expect_line(in, "kind");
  const ModelKind kind = model_kind_from_string(kind_name);

  TrainingMeta meta;
  meta.seed = std::stoull(expect_line(in, "seed"));
  meta.n_rows = std::stoull(expect_line(in, "rows"));
  meta.intercept_only = expect_line(in, "intercept_only") == "1";
  {
    const auto toks = split_ws(expect_line(in, "features"));
    if (toks.empty()) fail(ErrorKind::parse, "model file: bad features line");
    const size_t count = std::stoull(toks[0]);
    if (toks.size() != count + 1) fail(ErrorKind::parse, "model file: feature count mismatch");
    meta.feature_ids.assign(toks.begin() + 1, toks.end());
  }

  auto read_doubles = [&](const std::string& key, size_t count) {
    const auto toks = split_ws(expect_line(in, key));
    if (toks.size() != count)
      fail(ErrorKind::parse, "model file: expected " + std::to_string(count) + " values for " + key);
    std::vector<double> vals;
    vals.reserve(count);
    for (const auto& t : toks) vals.push_back(std::strtod(t.c_str(), nullptr));
    return vals;
  };

  switch (kind) {
    case ModelKind::linear: {
      auto model = std::make_unique<LinearModel>();
      model->meta_ = std::move(meta);
      const size_t d = std::stoull(expect_line(in, "d"));
      const auto coef = read_doubles("coef", d);
      model->coef_ = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(d));
      model->sigma2_ = std::strtod(expect_line(in, "sigma2").c_str(), nullptr);
      const auto inv = read_doubles("xtx_inv", d * d);
      model->xtx_inv_ = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>(
          inv.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      expect_line(in, "end");
      return model;
    }
    case ModelKind::bayesian_ridge: {
      auto model = std::make_unique<BayesianRidgeModel>();
      model->meta_ = std::move(meta);
      const size_t d = std::stoull(expect_line(in, "d"));
      const auto xm = read_doubles("x_mean", d);
      model->x_mean_ = Eigen::Map<const Eigen::VectorXd>(xm.data(), static_cast<Eigen::Index>(d));
      model->y_mean_ = std::strtod(expect_line(in, "y_mean").c_str(), nullptr);
      const auto coef = read_doubles("coef", d);
      model->coef_ = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(d));
      const auto sig = read_doubles("sigma", d * d);
      model->sigma_ = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(
          sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      model->weight_precision_ = std::strtod(expect_line(in, "alpha").c_str(), nullptr);
      model->noise_precision_ = std::strtod(expect_line(in, "beta").c_str(), nullptr);
      expect_line(in, "end");
      return model;
    }
    case ModelKind::random_forest: {
      auto model = std::make_unique<RandomForestModel>();
      model->meta_ = std::move(meta);
      const size_t trees = std::stoull(expect_line(in, "trees"));
      model->trees_.resize(trees);
      for (size_t t = 0; t < trees; ++t) {
        const auto head = split_ws(expect_line(in, "tree"));
        if (head.size() != 2 || std::stoull(head[0]) != t)
          fail(ErrorKind::parse, "model file: bad tree header");
        const size_t count = std::stoull(head[1]);
        model->trees_[t].resize(count);
        for (size_t k = 0; k < count; ++k) {
          std::string node_line;
          if (!std::getline(in, node_line)) fail(ErrorKind::parse, "model file: truncated tree");
          const auto toks = split_ws(node_line);
          if (toks.size() != 5) fail(ErrorKind::parse, "model file: bad tree node");
          auto& node = model->trees_[t][k];
          node.feature = std::stoi(toks[0]);
          node.threshold = std::strtod(toks[1].c_str(), nullptr);
          node.left = std::stoi(toks[2]);
          node.right = std::stoi(toks[3]);
          node.value = std::strtod(toks[4].c_str(), nullptr);
        }
      }
      expect_line(in, "end");
      return model;
    }
    case ModelKind::beta_regression: {
      auto model = std::make_unique<BetaRegressionModel>();
      model->meta_ = std::move(meta);
      const size_t d = std::stoull(expect_line(in, "d"));
      const auto coef = read_doubles("coef", d);
      model->coef_ = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(d));
      model->phi_ = std::strtod(expect_line(in, "phi").c_str(), nullptr);
      expect_line(in, "end");
      return model;
    }
  }
  fail(ErrorKind::parse, "model file: unknown kind");
}

std::unique_ptr<FittedRegressor> FittedRegressor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open model file " + path.string());
  return deserialize_regressor(in);
}

}  // namespace perfpred::regression
