#pragma once

#include <map>
#include <string>
#include <vector>

namespace perfpred::prompts {

/// Version tag for the prompt asset set; bump when any template text changes.
inline constexpr const char* kPromptAssetsVersion = "v1";

// --- confidence elicitation -------------------------------------------------

std::string render_verbalized_1s(const std::string& question);
std::string render_verbalized_2s(const std::string& question, const std::string& output);

// --- reference-free judge ---------------------------------------------------

struct JudgeDemo {
  std::string input;
  std::string output;
  double score = 0.0;  // normalized [0,1]
};

std::string render_judge_demos(const std::vector<JudgeDemo>& demos);
std::string render_judge_prompt(const std::string& task_context, const std::string& metric,
                                const std::string& examples_str, const std::string& test_input,
                                const std::string& test_response);

// --- entailment similarity backend -------------------------------------------

std::string render_entailment(const std::string& text_a, const std::string& text_b);

// --- reference-based metric templates ----------------------------------------

/// G-Eval criteria texts keyed by metric display name (Coherence, Consistency,
/// Fluency, Relevance).
const std::map<std::string, std::string>& g_eval_criteria();

std::string render_g_eval(const std::string& metric, const std::string& evaluation_instructions,
                          const std::string& source, const std::string& prediction);

std::string render_gemba_ref(const std::string& source_lang, const std::string& target_lang,
                             const std::string& source, const std::string& prediction,
                             const std::string& reference_texts);

std::string render_llm_eval(const std::string& source, const std::string& ans,
                            const std::string& ref_text);

std::string render_codejudge_functional(const std::string& instr, const std::string& source,
                                        const std::string& reference, const std::string& answer);

std::string render_codejudge_inconsistency(const std::string& problem, const std::string& code);

struct BiggenPrompt {
  std::string system;
  std::string user;
};
BiggenPrompt render_biggen_judge(const std::string& instruction, const std::string& response,
                                 const std::string& rubric);

/// Fixed-4-decimal score text used inside prompts ("0.7500"), locale-free.
std::string format_prompt_score(double score);

}  // namespace perfpred::prompts
