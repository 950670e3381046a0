#include "perfpred/judge.hpp"

#include <algorithm>
#include <cmath>

#include "perfpred/confidence.hpp"
#include "perfpred/dataset.hpp"
#include "perfpred/error.hpp"
#include "perfpred/rng.hpp"

namespace perfpred::judge {

namespace {
constexpr double kZ975 = 1.959964;
}

std::string build_judge_prompt(const JudgeConfig& cfg, const std::vector<prompts::JudgeDemo>& demos,
                               const std::string& test_input, const std::string& test_output) {
  if (cfg.shots > 16) fail(ErrorKind::config, "judge shots capped at 16");
  if (static_cast<int>(demos.size()) != cfg.shots)
    fail(ErrorKind::arity, "judge prompt needs exactly cfg.shots demos");
  for (const auto& d : demos)
    if (d.score < 0.0 || d.score > 1.0)
      fail(ErrorKind::range, "judge demo scores must be normalized to [0,1]");
  return prompts::render_judge_prompt(cfg.task_context, cfg.metric_description,
                                      prompts::render_judge_demos(demos), test_input, test_output);
}

Prediction parse_judge_response(const std::string& text) {
  const std::string body = confidence::extract_first_json_object(text);
  json obj = json::parse(body, nullptr, false);
  if (obj.is_discarded()) fail(ErrorKind::parse, "judge response is not valid JSON");
  for (const char* key : {"most_likely_estimate", "lower_bound_at_95", "upper_bound_at_95"})
    if (!obj.contains(key) || !obj[key].is_number())
      fail(ErrorKind::parse, std::string("judge response missing numeric '") + key + "'");

  double point = obj["most_likely_estimate"].get<double>();
  double lower = obj["lower_bound_at_95"].get<double>();
  double upper = obj["upper_bound_at_95"].get<double>();
  if (!std::isfinite(point) || !std::isfinite(lower) || !std::isfinite(upper))
    fail(ErrorKind::parse, "judge response has non-finite values");

  Prediction pred;
  pred.alpha = 0.05;
  pred.raw_point = point;
  pred.raw_lower = lower;
  pred.raw_upper = upper;

  if (lower > upper) {
    std::swap(lower, upper);
    pred.bounds_swapped = true;
  }
  if (point < lower || point > upper) {
    // point disagreed with its own bounds; pull it inside (flagged as a clamp)
    point = std::clamp(point, lower, upper);
    pred.clamped = true;
  }
  const double cp = std::clamp(point, 0.0, 1.0);
  const double cl = std::clamp(lower, 0.0, 1.0);
  const double cu = std::clamp(upper, 0.0, 1.0);
  if (cp != point || cl != lower || cu != upper) pred.clamped = true;
  pred.point = cp;
  pred.lower = cl;
  pred.upper = cu;
  if (!pred.clamped && !pred.bounds_swapped) {
    pred.raw_point.reset();
    pred.raw_lower.reset();
    pred.raw_upper.reset();
  }
  // interval not symmetric around the point (tolerated, flagged)
  if (std::abs((pred.upper - pred.point) - (pred.point - pred.lower)) > 1e-9)
    pred.asymmetric = true;
  return pred;
}

Prediction judge_predict(const JudgeConfig& cfg, const std::vector<prompts::JudgeDemo>& demos,
                         const std::string& test_input, const std::string& test_output,
                         llm::LlmClient& client, const llm::GenerationParams& params) {
  const std::string prompt = build_judge_prompt(cfg, demos, test_input, test_output);
  const auto first = client.generate(prompt, params);
  try {
    return parse_judge_response(first.text);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::parse) throw;
  }
  const auto retry =
      client.generate(prompt + "\n\nRespond with only the JSON object.", params);
  return parse_judge_response(retry.text);
}

PredictiveDistribution interval_to_distribution(const Prediction& pred) {
  const double point = pred.raw_point.value_or(pred.point);
  const double lower = pred.raw_lower.value_or(pred.lower);
  const double upper = pred.raw_upper.value_or(pred.upper);
  const double lo = std::min(lower, upper), hi = std::max(lower, upper);
  if (hi == lo) return regression::PointMass{point};
  const double sigma = (hi - lo) / (2.0 * kZ975);
  return regression::Gaussian{point, sigma};
}

std::vector<size_t> select_demo_indices(size_t pool, int shots, uint64_t seed) {
  if (shots < 1 || static_cast<size_t>(shots) > pool)
    fail(ErrorKind::size, "demo selection: need " + std::to_string(shots) + " of " +
                              std::to_string(pool) + " rows");
  const uint64_t stream = derive_seed(seed, "judge_demos/" + std::to_string(shots));
  auto picked = data::subsample_indices(pool, static_cast<size_t>(shots), stream);
  return picked;
}

}  // namespace perfpred::judge
