#include "perfpred/prompts.hpp"

#include <cstdio>

namespace perfpred::prompts {

namespace {

/// Replaces every "{key}" occurrence; placeholders with no entry are left
/// untouched so template damage is visible instead of silent.
std::string render(std::string tpl, const std::map<std::string, std::string>& args) {
  for (const auto& [key, value] : args) {
    const std::string needle = "{" + key + "}";
    size_t pos = 0;
    while ((pos = tpl.find(needle, pos)) != std::string::npos) {
      tpl.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

constexpr const char* kVerbalized1S =
    R"PP(Questions: {question}

Please provide your answer to the following question along with your confidence level (0-100).
Respond **using only** your answer and confidence level, without any additional explanation.
Format your response **strictly as JSON** in this exact format:
'{"Answer": "Your answer as a string", "Confidence": Your confidence level as a number}')PP";

constexpr const char* kVerbalized2S =
    R"PP(Question: {question}

G1: {output}

Provide the probability that each of your guesses is correct. Give ONLY the probabilities, no other words or explanation. The probabilities for each guess are independent.

Please answer question using JSON format: {'P1': <the probability between 0.0 and 1.0 that G1 is correct, without any extra commentary whatsoever; just the probability!>})PP";

constexpr const char* kJudgePrompt =
    R"PP(## Task ##
Given several examples of system input-output pairs along with their scores, predict what score the following test input-output pair would receive on the same metric.

## Shared Task Context ##
{task_context}

## Scoring Metric ##
The scores are based on the metric: {metric}. This metric may originate from an automatic measure (e.g., ROUGE, BLEU) or a model-based evaluation.

## Scored Examples ##
{examples_str}

## Test Pair to Score ##
System Input:
{test_input}

System Output:
{test_response}

## Required Output Format ##
Provide your prediction in the following JSON format:
{
    "most_likely_estimate": x,
    "lower_bound_at_95": xL,
    "upper_bound_at_95": xU
})PP";

constexpr const char* kEntailment =
    R"PP(Determine whether Text B is entailed by Text A.
Respond **strictly as JSON** in this exact format: {"probability": <the probability between 0.0 and 1.0 that Text B is entailed by Text A>}

Text A:
{text_a}

Text B:
{text_b})PP";

constexpr const char* kGEval =
    R"PP(You will be given a news article. You will then be given one summary written for this article.

Your task is to rate the summary on one metric.

Please make sure you read and understand these instructions carefully.
Please keep this document open while reviewing, and refer to it as needed.

Evaluation Criteria:

{evaluation_instructions}

Evaluation Steps:

1. Read the news article carefully and identify the main facts and key points.
2. Read the summary and compare it to the article. Check if the summary meets the {metric} criterion.
3. Assign a score for {metric} based on the Evaluation Criteria.

Source Text:

{source}

Summary:

{prediction}


Evaluation Form (scores ONLY), provide your response in the following format:
- {metric}:)PP";

constexpr const char* kGembaRef =
    R"PP(Evaluate the quality of the following translation from {source_lang} to {target_lang} on a scale from 0 to 100.

The scale starts from 'No meaning preserved', goes through 'Some meaning preserved', 'Most meaning preserved with few grammar mistakes', and up to 'Perfect meaning and grammar'.

Source Text (in {source_lang}):
{source}

Model's Translation (in {target_lang}):
{prediction}

Human Reference Translations (in {target_lang}):
{reference_texts}

Provide your response in the following format: Score:)PP";

constexpr const char* kLlmEval =
    R"PP(Task: Score the following LLM output of a question-answering task with respect to the following aspects using a 1 to 5 star rating system.

Dataset: The dataset is a Question-Answering dataset, specifically designed for evaluating factual precision and detailed comparative reasoning in AI-generated answers.

Output: Begin your evaluation by providing a short explanation. Be as objective as possible. After your explanation, provide your scores in JSON format like: [[SCORE]] {"accuracy": 2, "informativeness": 3}

Criteria:
- Accuracy:
    1 star: Incorrect information
    2 stars: Partially correct information
    3 stars: Half correct information
    4 stars: Mostly correct information
    5 stars: Perfectly correct information

- Informativeness:
    1 star: No or irrelevant information
    2 stars: Very little information
    3 stars: Some information
    4 stars: Enough information
    5 stars: Highly informative

Question:
{source}

Provided Answer:
{ans}

Reference Answer(s):
{ref_text}

Evaluation:
[[SCORE]] {"accuracy": <1–5>, "informativeness": <1–5>})PP";

constexpr const char* kCodeJudgeFunctional =
    R"PP(You will be given the code snippet for a problem.
Your task is to rate the code snippet only on one metric.

Evaluation Criteria:
Functional Correctness (0-4): Execution-based quality of the code snippet combined with the problem.
- 0: Fails all tests, totally incorrect.
- 4: Passes all tests, totally correct.
{instr}
Problem:
{source}

Reference Code:
{reference}

Code Snippet:
{answer}

Evaluation Form:
Functional Correctness (scores ONLY):)PP";

constexpr const char* kCodeJudgeInconsistency =
    R"PP(You will be provided with a problem statement, a code snippet that supposedly addresses the problem,
and a catalog of code inconsistencies.
Evaluation Steps:
1. Read the problem statement carefully to identify the functionalities required for the
implementation.
2. Read the code snippet and compare it to the problem statement. Check if the code snippet covers
the required functionalities.
3. Output your answer in a JSON format list.
a) If the code snippet is correct, output: ["inconsistency": "None", "severity": "Negligible"].
b) If the code snippet is incorrect, output the identified inconsistencies and their severity
according to the catalog of code inconsistencies. For example: ["inconsistency": "<inconsistency1>",
"severity": "<severity1>", "inconsistency": "<inconsistency2>", "severity": "<severity2>", ...]
Problem: {PROBLEM}
Code Snippet: {CODE}
Taxonomy of Common Inconsistencies:
1. Missing dependency declarations: Negligible
2. No error messages for unexpected input cases: Negligible
3. Inefficiency, unnecessary statements: Negligible
4. Edge case not handled: Small
5. Logic error: Major
6. Function or variable not defined: Fatal
7. Code not completed: Fatal
Evaluation Form:
JSON output (a JSON list only):)PP";

constexpr const char* kBiggenSystem =
    "You are a fair judge assistant tasked with providing clear, objective feedback based on "
    "specific criteria, ensuring each assessment reflects the absolute standards set for "
    "performance.";

constexpr const char* kBiggenUser =
    R"PP(###Task Description:
An instruction (might include an Input inside it), a response to evaluate, and a score rubric representing an evaluation criteria are given.
1. Write a detailed feedback that assesses the quality of the response strictly based on the given score rubric, not evaluating in general.
2. After writing a feedback, write a score that is an integer between 1 and 5. You should refer to the score rubric.
3. The output format should look as follows: "(write a feedback for criteria) [RESULT] (an integer number between 1 and 5)"
4. Please do not generate any other opening, closing, and explanations.

###The instruction to evaluate:
{instruction}

###Response to evaluate:
{response}

###Score Rubrics:
{rubric}

###Feedback: )PP";

}  // namespace

std::string render_verbalized_1s(const std::string& question) {
  return render(kVerbalized1S, {{"question", question}});
}

std::string render_verbalized_2s(const std::string& question, const std::string& output) {
  return render(kVerbalized2S, {{"question", question}, {"output", output}});
}

std::string format_prompt_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", score);
  return buf;
}

std::string render_judge_demos(const std::vector<JudgeDemo>& demos) {
  std::string out;
  for (size_t i = 0; i < demos.size(); ++i) {
    if (i) out += "\n\n";
    out += "System Input:\n" + demos[i].input + "\n\n";
    out += "System Output:\n" + demos[i].output + "\n\n";
    out += "Score: " + format_prompt_score(demos[i].score);
  }
  return out;
}

std::string render_judge_prompt(const std::string& task_context, const std::string& metric,
                                const std::string& examples_str, const std::string& test_input,
                                const std::string& test_response) {
  return render(kJudgePrompt, {{"task_context", task_context},
                               {"metric", metric},
                               {"examples_str", examples_str},
                               {"test_input", test_input},
                               {"test_response", test_response}});
}

std::string render_entailment(const std::string& text_a, const std::string& text_b) {
  return render(kEntailment, {{"text_a", text_a}, {"text_b", text_b}});
}

const std::map<std::string, std::string>& g_eval_criteria() {
  static const std::map<std::string, std::string> criteria{
      {"Coherence",
       "Coherence (1-5) - the collective quality of all sentences. A well-structured summary "
       "should build from sentence to a coherent body of information about a topic."},
      {"Consistency",
       "Consistency (1-5) - the factual alignment between the summary and the source document. A "
       "factually consistent summary contains only statements entailed by the source document and "
       "avoids hallucinated facts."},
      {"Fluency",
       "Fluency (1-3): the quality of the summary in terms of grammar, spelling, punctuation, "
       "word choice, and sentence structure.\n\n"
       "- 1: Poor. The summary has many errors that make it hard to understand or sound "
       "unnatural.\n"
       "- 2: Fair. The summary has some errors that affect the clarity or smoothness of the text, "
       "but the main points are still comprehensible.\n"
       "- 3: Good. The summary has few or no errors and is easy to read and follow."},
      {"Relevance",
       "Relevance (1-5) - selection of important content from the source. The summary should "
       "include only important information from the source document. Annotators were instructed "
       "to penalize summaries which contained redundancies and excess information."}};
  return criteria;
}

std::string render_g_eval(const std::string& metric, const std::string& evaluation_instructions,
                          const std::string& source, const std::string& prediction) {
  return render(kGEval, {{"metric", metric},
                         {"evaluation_instructions", evaluation_instructions},
                         {"source", source},
                         {"prediction", prediction}});
}

std::string render_gemba_ref(const std::string& source_lang, const std::string& target_lang,
                             const std::string& source, const std::string& prediction,
                             const std::string& reference_texts) {
  return render(kGembaRef, {{"source_lang", source_lang},
                            {"target_lang", target_lang},
                            {"source", source},
                            {"prediction", prediction},
                            {"reference_texts", reference_texts}});
}

std::string render_llm_eval(const std::string& source, const std::string& ans,
                            const std::string& ref_text) {
  return render(kLlmEval, {{"source", source}, {"ans", ans}, {"ref_text", ref_text}});
}

std::string render_codejudge_functional(const std::string& instr, const std::string& source,
                                        const std::string& reference, const std::string& answer) {
  return render(kCodeJudgeFunctional,
                {{"instr", instr}, {"source", source}, {"reference", reference}, {"answer", answer}});
}

std::string render_codejudge_inconsistency(const std::string& problem, const std::string& code) {
  return render(kCodeJudgeInconsistency, {{"PROBLEM", problem}, {"CODE", code}});
}

BiggenPrompt render_biggen_judge(const std::string& instruction, const std::string& response,
                                 const std::string& rubric) {
  BiggenPrompt out;
  out.system = kBiggenSystem;
  out.user = render(kBiggenUser,
                    {{"instruction", instruction}, {"response", response}, {"rubric", rubric}});
  return out;
}

}  // namespace perfpred::prompts
