#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perfpred/distribution.hpp"
#include "perfpred/llm_client.hpp"
#include "perfpred/prompts.hpp"

namespace perfpred::judge {

using regression::Prediction;
using regression::PredictiveDistribution;

struct JudgeConfig {
  int shots = 16;  // <= 16
  std::string metric_description;
  std::string task_context;
  uint64_t seed = 0;  // demo selection
};

/// Renders the few-shot judge prompt: |demos| must equal cfg.shots and demo
/// scores must be normalized. Byte-deterministic.
std::string build_judge_prompt(const JudgeConfig& cfg, const std::vector<prompts::JudgeDemo>& demos,
                               const std::string& test_input, const std::string& test_output);

/// Parses the judge's JSON reply into a Prediction at alpha = 0.05. Reversed
/// bounds are swapped, out-of-range values clamped to [0,1], and a point
/// outside its own bounds is pulled inside; each repair sets a flag. Missing
/// or non-numeric keys raise parse errors; nothing is imputed.
Prediction parse_judge_response(const std::string& text);

/// build -> generate -> parse. One retry with a JSON-only reminder on parse
/// failure, then the parse error propagates to the caller for tallying.
Prediction judge_predict(const JudgeConfig& cfg, const std::vector<prompts::JudgeDemo>& demos,
                         const std::string& test_input, const std::string& test_output,
                         llm::LlmClient& client, const llm::GenerationParams& params);

/// Symmetric Gaussian matching the 95% width: sigma = (u - l) / (2 * z_0.975);
/// a zero-width interval collapses to PointMass. Uses the pre-clamp bounds
/// when clamping was applied so proper scoring sees the raw law.
PredictiveDistribution interval_to_distribution(const Prediction& pred);

/// Uniform without-replacement draw of `shots` demo rows, deterministic per
/// (seed, shots).
std::vector<size_t> select_demo_indices(size_t pool, int shots, uint64_t seed);

}  // namespace perfpred::judge
