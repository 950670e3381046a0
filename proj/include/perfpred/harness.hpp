#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfpred/confidence.hpp"
#include "perfpred/dataset.hpp"
#include "perfpred/evaluation.hpp"
#include "perfpred/judge.hpp"
#include "perfpred/llm_client.hpp"
#include "perfpred/regression.hpp"

namespace perfpred::harness {

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  json mock_table;            // inline rule table for the mock backend
  std::string mock_table_file;
  std::string base_url;
  std::string model_id = "default";
  std::string api_key_env = "PERFPRED_API_KEY";
  int max_tokens = 769;
  double temperature = 1.0;
  double top_p = 0.9;
};

struct ExperimentConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
  std::string cache_dir;

  BackendConfig backend;                          // generation / confidence / judge
  std::optional<BackendConfig> scoring_backend;   // gold scoring; defaults to
                                                  // `backend` at temperature 0

  int num_samples = 3;
  double alpha = 0.05;
  std::vector<std::string> features = {
      confidence::kDegMat, confidence::kEcc,    confidence::kEigV, confidence::kLexSim,
      confidence::kNumSet, confidence::kVerb1S, confidence::kVerb2S};
  std::vector<regression::ModelKind> model_kinds = {
      regression::ModelKind::linear, regression::ModelKind::bayesian_ridge,
      regression::ModelKind::random_forest, regression::ModelKind::beta_regression};
  std::vector<int> judge_shots = {4, 8, 16};
  bool curve_include_judge = true;
  std::vector<size_t> train_sizes;                // empty: 4,8,16,... up to |train|
  uint64_t seed = 0;
  std::vector<uint64_t> curve_seeds = {0, 1, 2, 3, 4};

  std::string similarity_backend = "lexical_rouge_l";  // | llm_entailment | precomputed
  double numset_tau = 0.5;
  int ecc_k = 2;
  int parse_retries = 1;

  llm::ClientOptions client;
  regression::RegressionOptions regression;

  static ExperimentConfig from_json(const json& doc);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  void validate() const;
};

struct StageSummary {
  std::string stage;
  size_t produced = 0;
  std::vector<std::string> failures;  // itemized soft failures
};

struct CurveCell {
  std::string metric_id;
  std::string method_id;
  std::string model_kind;
  size_t n_train = 0;
  size_t reps = 0;
  double rmse_mean = 0.0, rmse_sd = 0.0;
  double crps_mean = 0.0, crps_sd = 0.0;
};

json dist_to_json(const regression::PredictiveDistribution& dist);
regression::PredictiveDistribution dist_from_json(const json& doc);

/// Stage orchestration over one dataset + out directory. Inputs are resolved
/// from out_dir first, then dataset_dir, so pre-supplied generations/scores
/// (direct assessment) work without running earlier stages.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  StageSummary run_generation();
  StageSummary run_gold_scoring(const std::string& only_template = "");
  StageSummary ingest_scores(const std::filesystem::path& raw_scores_file);
  StageSummary run_featurize();
  std::vector<evaluation::EvalReport> run_benchmark();
  std::vector<CurveCell> run_learning_curve();

  void write_reports(const std::vector<evaluation::EvalReport>& reports) const;
  void write_curve(const std::vector<CurveCell>& cells) const;

  /// Fits a single (metric, feature-set, kind) model on the train split.
  std::unique_ptr<regression::FittedRegressor> fit_single(
      const std::string& metric_id, const std::vector<std::string>& feature_ids,
      regression::ModelKind kind);

  /// Predicts a split with a fitted model and persists the rows.
  StageSummary predict_split(const regression::FittedRegressor& model,
                             const std::string& metric_id, const std::string& split_name,
                             const std::filesystem::path& out_file);

  /// Scores a persisted prediction file against gold for one metric.
  evaluation::EvalReport evaluate_predictions(const std::filesystem::path& predictions_file,
                                              const std::string& metric_id,
                                              const std::string& method_id);

  const data::Dataset& dataset();
  const data::DatasetSplit& split();
  const ExperimentConfig& config() const { return cfg_; }

 private:
  struct Row {
    std::string instance_id;
    int sample_index = 0;
    double gold = 0.0;
    const confidence::FeatureVector* features = nullptr;  // may be null
  };

  void load_inputs();
  std::filesystem::path resolve(const std::string& name) const;
  llm::LlmClient& gen_client();
  llm::LlmClient& score_client();
  llm::GenerationParams gen_params(const BackendConfig& b) const;

  std::vector<Row> metric_rows(const std::string& metric_id,
                               const std::vector<std::string>& instance_ids) const;
  std::vector<size_t> default_sizes(size_t train_rows) const;

  confidence::SimilarityMatrix build_similarity(const std::string& instance_id,
                                                const std::vector<std::string>& outputs);

  ExperimentConfig cfg_;
  bool loaded_ = false;
  data::Dataset dataset_;
  data::DatasetSplit split_;
  std::map<std::pair<std::string, int>, confidence::FeatureVector> features_;
  std::map<std::string, std::map<std::pair<std::string, int>, double>> gold_;  // metric -> row -> score
  std::map<std::string, std::vector<std::pair<int, std::string>>> outputs_;    // instance -> (sample, text)
  std::shared_ptr<llm::LlmClient> gen_client_;
  std::shared_ptr<llm::LlmClient> score_client_;
};

}  // namespace perfpred::harness
