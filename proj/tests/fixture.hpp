#pragma once

// Synthetic dataset + mock backend table shared by the pipeline and
// acceptance tests. Instance "quality" q in [0,1] drives everything: output
// agreement, verbalized confidences, mock judge replies and gold scores, so
// confidence features genuinely correlate with the metric scores.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "perfpred/harness.hpp"
#include "perfpred/jsonl.hpp"

namespace fixture {

using perfpred::json;

struct Options {
  int n_instances = 30;
  int samples = 3;
};

inline double quality(int i) { return (i % 10) / 9.0; }
inline double quality2(int i) { return ((i * 3) % 10) / 9.0; }

inline std::string marker(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "q%03d:", i);
  return buf;
}

inline std::string input_text(int i) {
  return "mock question " + marker(i) + " describe item " + std::to_string(i);
}

inline std::string sample_output(int i, int k) {
  static const char* base[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  const int shared = static_cast<int>(std::lround(quality(i) * 6.0));
  std::string out;
  for (int t = 0; t < shared; ++t) {
    if (t) out += ' ';
    out += base[t];
  }
  if (!out.empty()) out += ' ';
  out += "s" + std::to_string(k) + "i" + std::to_string(i % 4);
  return out;
}

inline std::string num(double v, int decimals = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline json mock_table(const Options& opts) {
  json rules = json::array();
  for (int i = 0; i < opts.n_instances; ++i) {
    const double q = quality(i);
    const double q2 = quality2(i);
    const std::string in = input_text(i);

    // judge: match the test-pair section so demo blocks never trigger it
    const double point = std::clamp(q, 0.05, 0.95);
    rules.push_back(json{
        {"contains", json::array({"## Test Pair to Score ##\nSystem Input:\n" + in})},
        {"text", "{\"most_likely_estimate\":" + num(point) +
                     ",\"lower_bound_at_95\":" + num(std::max(0.0, point - 0.15)) +
                     ",\"upper_bound_at_95\":" + num(std::min(1.0, point + 0.15)) + "}"}});

    // verbalized 1S / 2S
    const int conf_pct =
        static_cast<int>(std::lround(100.0 * std::clamp(q + 0.05 * (i % 3 - 1), 0.01, 0.99)));
    rules.push_back(json{{"contains", json::array({"Questions: " + in})},
                         {"text", "{\"Answer\": \"item " + std::to_string(i) +
                                      "\", \"Confidence\": " + std::to_string(conf_pct) + "}"}});
    json two_step = json::array();
    for (int k = 0; k < opts.samples; ++k)
      two_step.push_back("{\"P1\": " + num(std::clamp(0.9 * q + 0.03 * k, 0.01, 0.99)) + "}");
    rules.push_back(
        json{{"contains", json::array({"Question: " + in + "\n\nG1:"})}, {"texts", two_step}});

    // gold scoring templates
    const int accuracy = 1 + static_cast<int>(std::lround(4.0 * q));
    const int informativeness = 1 + static_cast<int>(std::lround(4.0 * q2));
    rules.push_back(json{
        {"contains", json::array({"1 to 5 star rating system", "Question:\n" + in})},
        {"text", "The answer looks reasonable. [[SCORE]] {\"accuracy\": " +
                     std::to_string(accuracy) +
                     ", \"informativeness\": " + std::to_string(informativeness) + "}"}});
    const int gemba = static_cast<int>(std::lround(100.0 * (0.5 * q + 0.5 * q2)));
    rules.push_back(json{
        {"contains", json::array({"scale from 0 to 100", "Source Text (in English):\n" + in})},
        {"text", "Score: " + std::to_string(gemba)}});
  }
  // generation rules come last so every specialized prompt matches first
  for (int i = 0; i < opts.n_instances; ++i) {
    json texts = json::array();
    for (int k = 0; k < opts.samples; ++k) texts.push_back(sample_output(i, k));
    rules.push_back(json{{"contains", json::array({input_text(i)})}, {"texts", texts}});
  }
  return json{{"kind", "mock"}, {"table", rules}};
}

inline void write_dataset(const std::filesystem::path& dir, const Options& opts) {
  std::filesystem::create_directories(dir);
  const json metrics{
      {"dataset_id", "synthetic"},
      {"metrics",
       json::array(
           {json{{"metric_id", "accuracy"},
                 {"scale_min", 1},
                 {"scale_max", 5},
                 {"description", "LLM-Eval accuracy (1-5 stars)"},
                 {"source", "llm_judge_template"},
                 {"template", "llm_eval"},
                 {"template_args", json{{"key", "accuracy"}}}},
            json{{"metric_id", "informativeness"},
                 {"scale_min", 1},
                 {"scale_max", 5},
                 {"description", "LLM-Eval informativeness (1-5 stars)"},
                 {"source", "llm_judge_template"},
                 {"template", "llm_eval"},
                 {"template_args", json{{"key", "informativeness"}}}},
            json{{"metric_id", "gemba"},
                 {"scale_min", 0},
                 {"scale_max", 100},
                 {"description", "reference-based translation quality (0-100)"},
                 {"source", "llm_judge_template"},
                 {"template", "gemba_ref"},
                 {"template_args", json{{"source_lang", "English"}, {"target_lang", "Spanish"}}}},
            json{{"metric_id", "overlap"},
                 {"scale_min", 0},
                 {"scale_max", 1},
                 {"description", "ingested reference-overlap score"},
                 {"source", "ingested"}}})}};
  perfpred::write_text_file(dir / "metrics.json", metrics.dump(2));

  std::vector<json> instances;
  std::vector<json> scores;
  for (int i = 0; i < opts.n_instances; ++i) {
    instances.push_back(json{{"id", "inst" + std::to_string(100 + i)},
                             {"task_id", "synthetic"},
                             {"input", input_text(i)},
                             {"references", json::array({"reference for item " +
                                                         std::to_string(i)})},
                             {"task_context", "Answer questions about items."}});
    for (int k = 0; k < opts.samples; ++k)
      scores.push_back(json{{"instance_id", "inst" + std::to_string(100 + i)},
                            {"sample_index", k},
                            {"metric_id", "overlap"},
                            {"raw_score", std::clamp(quality(i) + 0.02 * k, 0.0, 1.0)}});
  }
  perfpred::write_jsonl(dir / "instances.jsonl", instances);
  perfpred::write_jsonl(dir / "scores.jsonl", scores);
}

inline perfpred::harness::ExperimentConfig make_config(const std::filesystem::path& dataset_dir,
                                                       const std::filesystem::path& out_dir,
                                                       const Options& opts,
                                                       const std::string& cache_dir = {}) {
  perfpred::harness::ExperimentConfig cfg;
  cfg.dataset_dir = dataset_dir;
  cfg.out_dir = out_dir;
  cfg.cache_dir = cache_dir;
  cfg.client.cache_dir = cache_dir;
  cfg.client.backoff_base_ms = 0;
  cfg.backend.kind = "mock";
  cfg.backend.mock_table = mock_table(opts);
  cfg.num_samples = opts.samples;
  return cfg;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("perfpred_fx_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
