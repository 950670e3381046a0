#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "perfpred/jsonl.hpp"
#include "perfpred/prompts.hpp"

using namespace perfpred;
using namespace perfpred::prompts;

namespace {

/// Golden files carry one trailing newline from the editor; the rendered
/// prompts do not. Everything before it must match byte for byte.
std::string golden(const std::string& name) {
  std::string body = read_text_file(std::string(PERFPRED_GOLDEN_DIR) + "/" + name + ".golden");
  if (!body.empty() && body.back() == '\n') body.pop_back();
  return body;
}

}  // namespace

TEST_CASE("verbalized templates render to the golden bytes") {
  CHECK(render_verbalized_1s("What is the capital of France?") == golden("verbalized_1s"));
  CHECK(render_verbalized_2s("What is the capital of France?", "Paris is the capital.") ==
        golden("verbalized_2s"));
}

TEST_CASE("judge prompt renders to the golden bytes") {
  const std::vector<JudgeDemo> demos{{"2+2?", "4", 1.0}, {"2+3?", "6", 0.25}};
  const auto prompt = render_judge_prompt("Answer arithmetic questions concisely.",
                                          "exact match quality", render_judge_demos(demos),
                                          "5+5?", "10");
  CHECK(prompt == golden("rf_llmaaj"));
}

TEST_CASE("metric templates render to the golden bytes") {
  CHECK(render_g_eval("Coherence", g_eval_criteria().at("Coherence"), "ARTICLE.", "SUMMARY.") ==
        golden("g_eval_coherence"));
  CHECK(render_gemba_ref("English", "Spanish", "Hello world.", "Hola mundo.", "Hola, mundo.") ==
        golden("gemba_ref"));
  CHECK(render_llm_eval("What is 2+2?", "4", "four") == golden("llm_eval"));
  CHECK(render_codejudge_functional("", "Write add(a,b).", "def add(a,b): return a+b",
                                    "def add(a,b): return a-b") == golden("codejudge_functional"));
  CHECK(render_codejudge_inconsistency("Write add(a,b).", "def add(a,b): return a-b") ==
        golden("codejudge_inconsistency"));
  const auto biggen = render_biggen_judge("Explain tides.", "The moon.",
                                          "Completeness of the physical explanation, scored 1-5.");
  CHECK(biggen.user == golden("biggen_user"));
  CHECK(biggen.system ==
        "You are a fair judge assistant tasked with providing clear, objective feedback based on "
        "specific criteria, ensuring each assessment reflects the absolute standards set for "
        "performance.");
}

TEST_CASE("rendering is deterministic") {
  const std::vector<JudgeDemo> demos{{"in", "out", 0.5}};
  const auto a = render_judge_prompt("ctx", "m", render_judge_demos(demos), "ti", "to");
  const auto b = render_judge_prompt("ctx", "m", render_judge_demos(demos), "ti", "to");
  CHECK(a == b);
}

TEST_CASE("empty task context keeps the section with an empty body") {
  const auto prompt = render_judge_prompt("", "m", "", "ti", "to");
  CHECK(prompt.find("## Shared Task Context ##\n\n\n## Scoring Metric ##") != std::string::npos);
}

TEST_CASE("demo blocks appear once per demo") {
  std::vector<JudgeDemo> demos;
  for (int i = 0; i < 4; ++i)
    demos.push_back({"in" + std::to_string(i), "out" + std::to_string(i), 0.25 * i});
  const auto prompt =
      render_judge_prompt("ctx", "m", render_judge_demos(demos), "test-in", "test-out");
  size_t count = 0, pos = 0;
  while ((pos = prompt.find("System Input:", pos)) != std::string::npos) {
    ++count;
    pos += 1;
  }
  CHECK(count == 5);  // 4 demos + the test pair
  size_t scores = 0;
  pos = 0;
  while ((pos = prompt.find("Score: ", pos)) != std::string::npos) {
    ++scores;
    pos += 1;
  }
  CHECK(scores == 4);
}

TEST_CASE("prompt ends with the literal output-format skeleton") {
  const auto prompt = render_judge_prompt("", "m", "", "ti", "to");
  const std::string tail =
      "{\n"
      "    \"most_likely_estimate\": x,\n"
      "    \"lower_bound_at_95\": xL,\n"
      "    \"upper_bound_at_95\": xU\n"
      "}";
  REQUIRE(prompt.size() >= tail.size());
  CHECK(prompt.substr(prompt.size() - tail.size()) == tail);
}
