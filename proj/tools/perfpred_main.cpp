// perfpred: predicts evaluation-metric scores and prediction intervals for
// black-box generator outputs, and runs the benchmark protocol around them.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "perfpred/harness.hpp"

using perfpred::harness::ExperimentConfig;
using perfpred::harness::Pipeline;
using perfpred::harness::StageSummary;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::string backend;
  std::string cache_dir;
  long long seed = -1;
  bool mock = false;
};

ExperimentConfig load_config(const GlobalArgs& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = ExperimentConfig::from_file(g.config_path);
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (!g.cache_dir.empty()) cfg.cache_dir = g.cache_dir;
  if (g.seed >= 0) cfg.seed = static_cast<uint64_t>(g.seed);
  if (g.mock) cfg.backend.kind = "mock";
  if (!g.backend.empty()) cfg.backend.kind = g.backend;
  cfg.client.cache_dir = cfg.cache_dir;
  return cfg;
}

int print_summary(const StageSummary& s) {
  std::printf("%s: %zu records", s.stage.c_str(), s.produced);
  if (!s.failures.empty()) {
    std::printf(", %zu failures\n", s.failures.size());
    for (const auto& f : s.failures) std::printf("  failed: %s\n", f.c_str());
  } else {
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"performance prediction toolkit"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config file (JSON)");
  app.add_option("--out-dir", g.out_dir, "output directory (overrides config)");
  app.add_option("--seed", g.seed, "base seed (overrides config)");
  app.add_option("--backend", g.backend, "backend kind: mock | http");
  app.add_option("--cache-dir", g.cache_dir, "completion cache directory (overrides config)");
  app.add_flag("--mock", g.mock, "force the mock backend");

  auto* cmd_generate = app.add_subcommand("generate", "sample n outputs per instance");

  std::string score_template, ingest_file;
  auto* cmd_score = app.add_subcommand("score", "produce gold scores via metric templates");
  cmd_score->add_option("--template", score_template, "only this scoring template");
  cmd_score->add_option("--ingest", ingest_file, "merge precomputed raw scores from a file");

  auto* cmd_featurize = app.add_subcommand("featurize", "compute confidence features");

  std::string fit_metric, fit_feature, fit_kind = "random_forest", model_out = "model.txt";
  auto* cmd_fit = app.add_subcommand("fit", "fit one regressor on the train split");
  cmd_fit->add_option("--metric", fit_metric, "metric id")->required();
  cmd_fit->add_option("--feature", fit_feature, "feature id")->required();
  cmd_fit->add_option("--kind", fit_kind, "regressor kind");
  cmd_fit->add_option("--model-out", model_out, "model file path");

  std::string pred_model, pred_metric, pred_split = "test", pred_out = "predictions.jsonl";
  auto* cmd_predict = app.add_subcommand("predict", "predict a split with a saved model");
  cmd_predict->add_option("--model", pred_model, "model file")->required();
  cmd_predict->add_option("--metric", pred_metric, "metric id")->required();
  cmd_predict->add_option("--split", pred_split, "train | dev | test");
  cmd_predict->add_option("--out", pred_out, "predictions file");

  std::string eval_predictions, eval_metric, eval_method = "custom";
  auto* cmd_evaluate = app.add_subcommand(
      "evaluate", "run the benchmark (or score a predictions file with --predictions)");
  cmd_evaluate->add_option("--predictions", eval_predictions, "predictions file to score");
  cmd_evaluate->add_option("--metric", eval_metric, "metric id (with --predictions)");
  cmd_evaluate->add_option("--method", eval_method, "method label (with --predictions)");

  auto* cmd_curve = app.add_subcommand("learning-curve", "sample-efficiency sweep");
  auto* cmd_report = app.add_subcommand("report", "re-emit tables from records.jsonl");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(g);
    Pipeline pipeline(cfg);

    if (cmd_generate->parsed()) return print_summary(pipeline.run_generation());
    if (cmd_score->parsed()) {
      if (!ingest_file.empty()) print_summary(pipeline.ingest_scores(ingest_file));
      return print_summary(pipeline.run_gold_scoring(score_template));
    }
    if (cmd_featurize->parsed()) return print_summary(pipeline.run_featurize());
    if (cmd_fit->parsed()) {
      auto model = pipeline.fit_single(fit_metric, {fit_feature},
                                       perfpred::regression::model_kind_from_string(fit_kind));
      model->save(model_out);
      std::printf("fit: %s model on %zu rows -> %s\n", fit_kind.c_str(),
                  model->meta().n_rows, model_out.c_str());
      return 0;
    }
    if (cmd_predict->parsed()) {
      auto model = perfpred::regression::FittedRegressor::load(pred_model);
      return print_summary(pipeline.predict_split(*model, pred_metric, pred_split, pred_out));
    }
    if (cmd_evaluate->parsed()) {
      if (!eval_predictions.empty()) {
        if (eval_metric.empty()) {
          std::fprintf(stderr, "evaluate --predictions needs --metric\n");
          return 1;
        }
        const auto report = pipeline.evaluate_predictions(eval_predictions, eval_metric,
                                                          eval_method);
        std::printf("%s %s: rmse=%.4f crps=%.4f picp=%.4f ace=%.4f n=%zu failed=%zu\n",
                    report.metric_id.c_str(), report.method_id.c_str(), report.rmse,
                    report.crps_mean, report.picp, report.ace, report.n_instances,
                    report.n_failed);
        return 0;
      }
      const auto reports = pipeline.run_benchmark();
      pipeline.write_reports(reports);
      std::printf("evaluate: %zu report rows -> %s\n", reports.size(),
                  cfg.out_dir.string().c_str());
      return 0;
    }
    if (cmd_curve->parsed()) {
      const auto cells = pipeline.run_learning_curve();
      pipeline.write_curve(cells);
      std::printf("learning-curve: %zu cells -> %s\n", cells.size(),
                  cfg.out_dir.string().c_str());
      return 0;
    }
    if (cmd_report->parsed()) {
      // rebuild tables from the persisted full-precision records
      const auto records = perfpred::read_jsonl(cfg.out_dir / "records.jsonl");
      std::vector<perfpred::evaluation::EvalReport> reports;
      for (const auto& rec : records) {
        perfpred::evaluation::EvalReport r;
        r.dataset_id = rec.at("dataset").get<std::string>();
        r.metric_id = rec.at("metric").get<std::string>();
        r.method_id = rec.at("method").get<std::string>();
        r.model_kind = rec.value("model_kind", std::string{});
        r.n_train = rec.value("n_train", 0ULL);
        r.n_instances = rec.value("n_instances", 0ULL);
        r.n_failed = rec.value("n_failed", 0ULL);
        r.rmse = rec.value("rmse", 0.0);
        r.crps_mean = rec.value("crps", 0.0);
        r.picp = rec.value("picp", 0.0);
        r.ace = rec.value("ace", 0.0);
        r.ace_signed = rec.value("ace_signed", 0.0);
        r.nominal_p = rec.value("p", 0.95);
        if (rec.contains("pearson") && !rec["pearson"].is_null())
          r.pearson = rec["pearson"].get<double>();
        reports.push_back(std::move(r));
      }
      pipeline.write_reports(reports);
      std::printf("report: %zu rows re-emitted\n", reports.size());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
