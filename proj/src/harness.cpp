#include "perfpred/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"
#include "perfpred/prompts.hpp"
#include "perfpred/rng.hpp"

namespace perfpred::harness {

using confidence::FeatureVector;
using data::Dataset;
using data::DatasetSplit;
using data::MetricSpec;
using data::MetricSource;
using evaluation::EvalReport;
using regression::FittedRegressor;
using regression::ModelKind;
using regression::PredictiveDistribution;

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace {

BackendConfig backend_from_json(const json& doc) {
  BackendConfig b;
  b.kind = doc.value("kind", std::string{"mock"});
  if (doc.contains("table")) b.mock_table = doc;
  b.mock_table_file = doc.value("table_file", std::string{});
  b.base_url = doc.value("base_url", std::string{});
  b.model_id = doc.value("model_id", std::string{"default"});
  b.api_key_env = doc.value("api_key_env", std::string{"PERFPRED_API_KEY"});
  b.max_tokens = doc.value("max_tokens", 769);
  b.temperature = doc.value("temperature", 1.0);
  b.top_p = doc.value("top_p", 0.9);
  return b;
}

bool is_power_of_two(size_t v) { return v && (v & (v - 1)) == 0; }

std::string fmt_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig cfg;
  cfg.dataset_dir = doc.value("dataset_dir", std::string{});
  cfg.out_dir = doc.value("out_dir", std::string{"out"});
  cfg.cache_dir = doc.value("cache_dir", std::string{});
  if (doc.contains("backend")) cfg.backend = backend_from_json(doc["backend"]);
  if (doc.contains("scoring_backend"))
    cfg.scoring_backend = backend_from_json(doc["scoring_backend"]);
  cfg.num_samples = doc.value("num_samples", 3);
  cfg.alpha = doc.value("alpha", 0.05);
  if (doc.contains("features")) cfg.features = doc["features"].get<std::vector<std::string>>();
  if (doc.contains("model_kinds")) {
    cfg.model_kinds.clear();
    for (const auto& k : doc["model_kinds"])
      cfg.model_kinds.push_back(regression::model_kind_from_string(k.get<std::string>()));
  }
  if (doc.contains("judge_shots")) cfg.judge_shots = doc["judge_shots"].get<std::vector<int>>();
  cfg.curve_include_judge = doc.value("curve_include_judge", true);
  if (doc.contains("train_sizes")) cfg.train_sizes = doc["train_sizes"].get<std::vector<size_t>>();
  cfg.seed = doc.value("seed", 0ULL);
  if (doc.contains("curve_seeds")) cfg.curve_seeds = doc["curve_seeds"].get<std::vector<uint64_t>>();
  cfg.similarity_backend = doc.value("similarity_backend", std::string{"lexical_rouge_l"});
  cfg.numset_tau = doc.value("numset_tau", 0.5);
  cfg.ecc_k = doc.value("ecc_k", 2);
  cfg.parse_retries = doc.value("parse_retries", 1);
  cfg.client.cache_dir = cfg.cache_dir;
  cfg.client.max_retries = doc.value("max_retries", 5);
  cfg.client.backoff_base_ms = doc.value("backoff_base_ms", 250);
  cfg.client.max_in_flight = doc.value("max_in_flight", 4);
  cfg.regression.forest_trees = doc.value("forest_trees", 100);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::config, "config file is not valid JSON: " + path.string());
  return from_json(doc);
}

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::config, "alpha must be in (0,1)");
  if (num_samples < 1) fail(ErrorKind::config, "num_samples must be >= 1");
  for (int s : judge_shots)
    if (s < 1 || s > 16) fail(ErrorKind::config, "judge shots must be in [1,16]");
  if (!train_sizes.empty()) {
    // strictly increasing powers of two starting at 4; the final entry may be
    // the full train size instead
    for (size_t i = 0; i < train_sizes.size(); ++i) {
      if (i > 0 && train_sizes[i] <= train_sizes[i - 1])
        fail(ErrorKind::config, "train_sizes must be strictly increasing");
      const bool last = i + 1 == train_sizes.size();
      if (!last && (!is_power_of_two(train_sizes[i]) || train_sizes[i] < 4))
        fail(ErrorKind::config, "train_sizes must be powers of two starting at 4");
    }
    if (train_sizes[0] < 2) fail(ErrorKind::config, "train sizes must be >= 2");
  }
  if (!(numset_tau > 0.0 && numset_tau < 1.0)) fail(ErrorKind::config, "numset_tau must be in (0,1)");
  if (ecc_k < 1) fail(ErrorKind::config, "ecc_k must be >= 1");
}

// ---------------------------------------------------------------------------
// distribution (de)serialization for prediction files
// ---------------------------------------------------------------------------

json dist_to_json(const PredictiveDistribution& dist) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, regression::Gaussian>) {
          return json{{"kind", "gaussian"}, {"mu", d.mu}, {"sigma", d.sigma}};
        } else if constexpr (std::is_same_v<T, regression::BetaDist>) {
          return json{{"kind", "beta"}, {"alpha", d.alpha}, {"beta", d.beta}};
        } else if constexpr (std::is_same_v<T, regression::Empirical>) {
          return json{{"kind", "empirical"}, {"samples", d.samples}};
        } else if constexpr (std::is_same_v<T, regression::PointMass>) {
          return json{{"kind", "point_mass"}, {"value", d.value}};
        } else {
          return json{{"kind", "interval_only"},
                      {"point", d.point},
                      {"lower", d.lower},
                      {"upper", d.upper}};
        }
      },
      dist);
}

PredictiveDistribution dist_from_json(const json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "gaussian")
    return regression::make_gaussian(doc.at("mu").get<double>(), doc.at("sigma").get<double>());
  if (kind == "beta")
    return regression::make_beta(doc.at("alpha").get<double>(), doc.at("beta").get<double>());
  if (kind == "empirical")
    return regression::make_empirical(doc.at("samples").get<std::vector<double>>());
  if (kind == "point_mass") return regression::make_point_mass(doc.at("value").get<double>());
  if (kind == "interval_only")
    return regression::make_interval_only(doc.at("point").get<double>(),
                                          doc.at("lower").get<double>(),
                                          doc.at("upper").get<double>());
  fail(ErrorKind::parse, "unknown distribution kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// response parsing for gold-scoring templates
// ---------------------------------------------------------------------------

namespace {

std::optional<double> scan_number(const std::string& text, size_t from) {
  for (size_t i = from; i < text.size(); ++i) {
    const char c = text[i];
    const bool digit = std::isdigit(static_cast<unsigned char>(c));
    const bool sign = (c == '-' || c == '+') && i + 1 < text.size() &&
                      std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (digit || sign) {
      char* end = nullptr;
      const double v = std::strtod(text.c_str() + i, &end);
      if (end != text.c_str() + i) return v;
    }
  }
  return std::nullopt;
}

double parse_scalar_after(const std::string& text, const std::string& marker, bool required) {
  const size_t pos = text.find(marker);
  if (pos != std::string::npos) {
    const auto v = scan_number(text, pos + marker.size());
    if (v) return *v;
    fail(ErrorKind::parse, "no number after '" + marker + "'");
  }
  if (required) fail(ErrorKind::parse, "marker '" + marker + "' not found in response");
  const auto v = scan_number(text, 0);
  if (!v) fail(ErrorKind::parse, "no number in response");
  return *v;
}

std::string extract_first_json_array(const std::string& text) {
  const size_t start = text.find('[');
  if (start == std::string::npos) fail(ErrorKind::parse, "no JSON array in response");
  int depth = 0;
  bool in_string = false, escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '[')
      ++depth;
    else if (c == ']') {
      --depth;
      if (depth == 0) return text.substr(start, i - start + 1);
    }
  }
  fail(ErrorKind::parse, "unbalanced JSON array in response");
}

int severity_penalty(const std::string& severity) {
  if (severity == "Negligible") return 0;
  if (severity == "Small") return 5;
  if (severity == "Major") return 50;
  if (severity == "Fatal") return 100;
  fail(ErrorKind::parse, "unknown severity '" + severity + "'");
}

/// Aggregates inconsistency severities into a 0-100 raw score. Accepts both
/// well-formed JSON arrays of objects and the template's literal
/// ["key": value, ...] shape.
double parse_codejudge_inconsistency(const std::string& text) {
  const std::string body = extract_first_json_array(text);
  int penalty = 0;
  bool found = false;

  json arr = json::parse(body, nullptr, false);
  if (!arr.is_discarded() && arr.is_array()) {
    for (const auto& item : arr)
      if (item.is_object() && item.contains("severity") && item["severity"].is_string()) {
        penalty += severity_penalty(item["severity"].get<std::string>());
        found = true;
      }
  }
  if (!found) {
    // tolerate the template's non-JSON list: scan "severity": "<level>"
    size_t pos = 0;
    while ((pos = body.find("severity", pos)) != std::string::npos) {
      pos += 8;
      const size_t colon = body.find(':', pos);
      if (colon == std::string::npos) break;
      const size_t q1 = body.find('"', colon);
      if (q1 == std::string::npos) break;
      const size_t q2 = body.find('"', q1 + 1);
      if (q2 == std::string::npos) break;
      penalty += severity_penalty(body.substr(q1 + 1, q2 - q1 - 1));
      found = true;
      pos = q2 + 1;
    }
  }
  if (!found) fail(ErrorKind::parse, "no severities in inconsistency response");
  return std::max(0, 100 - penalty);
}

json parse_llm_eval_scores(const std::string& text) {
  size_t from = 0;
  const size_t marker = text.find("[[SCORE]]");
  if (marker != std::string::npos) from = marker + 9;
  const std::string tail = text.substr(from);
  const std::string body = confidence::extract_first_json_object(tail);
  json obj = json::parse(body, nullptr, false);
  if (obj.is_discarded()) fail(ErrorKind::parse, "invalid [[SCORE]] JSON object");
  return obj;
}

}  // namespace

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::filesystem::create_directories(cfg_.out_dir);
}

std::filesystem::path Pipeline::resolve(const std::string& name) const {
  const auto in_out = cfg_.out_dir / name;
  if (std::filesystem::exists(in_out)) return in_out;
  return cfg_.dataset_dir / name;
}

namespace {

std::shared_ptr<llm::Backend> make_backend(const BackendConfig& b) {
  if (b.kind == "mock") {
    json table = b.mock_table;
    if (!b.mock_table_file.empty()) {
      table = json::parse(read_text_file(b.mock_table_file), nullptr, false);
      if (table.is_discarded()) fail(ErrorKind::config, "mock table file is not valid JSON");
    }
    if (!table.contains("table")) fail(ErrorKind::config, "mock backend needs a rule table");
    return llm::MockBackend::from_json(table);
  }
  if (b.kind == "http") {
    if (b.base_url.empty()) fail(ErrorKind::config, "http backend needs base_url");
    return std::make_shared<llm::HttpBackend>(b.base_url, b.api_key_env);
  }
  fail(ErrorKind::config, "unknown backend kind '" + b.kind + "'");
}

}  // namespace

llm::LlmClient& Pipeline::gen_client() {
  if (!gen_client_)
    gen_client_ = std::make_shared<llm::LlmClient>(make_backend(cfg_.backend), cfg_.client);
  return *gen_client_;
}

llm::LlmClient& Pipeline::score_client() {
  if (!score_client_) {
    BackendConfig b = cfg_.scoring_backend ? *cfg_.scoring_backend : cfg_.backend;
    if (!cfg_.scoring_backend) b.temperature = 0.0;  // judge decoding default
    score_client_ = std::make_shared<llm::LlmClient>(make_backend(b), cfg_.client);
  }
  return *score_client_;
}

llm::GenerationParams Pipeline::gen_params(const BackendConfig& b) const {
  llm::GenerationParams p;
  p.max_tokens = b.max_tokens;
  p.temperature = b.temperature;
  p.top_p = b.top_p;
  p.model_id = b.model_id;
  p.num_samples = cfg_.num_samples;
  return p;
}

void Pipeline::load_inputs() {
  if (loaded_) return;
  dataset_ = data::load_dataset(cfg_.dataset_dir);

  // out_dir copies of generations/scores supersede the dataset's own
  const auto gen_path = cfg_.out_dir / "generations.jsonl";
  if (std::filesystem::exists(gen_path)) {
    dataset_.generations.clear();
    read_jsonl(gen_path, [&](size_t, const json& rec) {
      data::Generation g;
      g.instance_id = rec.at("instance_id").get<std::string>();
      g.sample_index = rec.at("sample_index").get<int>();
      g.output = rec.at("output").get<std::string>();
      dataset_.generations.push_back(std::move(g));
    });
  }
  const auto score_path = cfg_.out_dir / "scores.jsonl";
  if (std::filesystem::exists(score_path)) {
    dataset_.scores.clear();
    read_jsonl(score_path, [&](size_t, const json& rec) {
      data::ScoredExample s;
      s.instance_id = rec.at("instance_id").get<std::string>();
      s.sample_index = rec.at("sample_index").get<int>();
      s.metric_id = rec.at("metric_id").get<std::string>();
      s.raw_score = rec.at("raw_score").get<double>();
      const auto* spec = dataset_.find_metric(s.metric_id);
      if (!spec) fail(ErrorKind::integrity, "scores file references unknown metric " + s.metric_id);
      s.score = data::normalize_score(s.raw_score, *spec);
      dataset_.scores.push_back(std::move(s));
    });
  }

  outputs_.clear();
  for (const auto& g : dataset_.generations)
    outputs_[g.instance_id].emplace_back(g.sample_index, g.output);
  for (auto& [_, v] : outputs_) std::sort(v.begin(), v.end());

  gold_.clear();
  for (const auto& s : dataset_.scores)
    gold_[s.metric_id][{s.instance_id, s.sample_index}] = s.score;

  features_.clear();
  const auto feat_path = cfg_.out_dir / "features.jsonl";
  if (std::filesystem::exists(feat_path)) {
    read_jsonl(feat_path, [&](size_t, const json& rec) {
      FeatureVector fv;
      fv.instance_id = rec.at("instance_id").get<std::string>();
      fv.sample_index = rec.at("sample_index").get<int>();
      for (const auto& [k, v] : rec.at("features").items()) fv.features[k] = v.get<double>();
      features_[{fv.instance_id, fv.sample_index}] = std::move(fv);
    });
  }

  // splits: reload the materialized lists when present, else split + persist
  const auto split_dir = cfg_.out_dir / "splits";
  if (std::filesystem::exists(split_dir / "train.txt")) {
    split_ = data::load_split(split_dir);
  } else if (!dataset_.instances.empty()) {
    split_ = data::split_dataset(dataset_.instances, {3, 1, 1}, cfg_.seed);
    data::save_split(split_, split_dir);
  }

  // train/dev/test discipline: the three id sets must be disjoint
  std::set<std::string> seen;
  for (const auto* part : {&split_.train, &split_.dev, &split_.test})
    for (const auto& id : *part)
      if (!seen.insert(id).second)
        fail(ErrorKind::integrity, "split leakage: instance '" + id + "' in multiple splits");

  loaded_ = true;
}

const Dataset& Pipeline::dataset() {
  load_inputs();
  return dataset_;
}

const DatasetSplit& Pipeline::split() {
  load_inputs();
  return split_;
}

// ---------------------------------------------------------------------------
// stage: generation
// ---------------------------------------------------------------------------

StageSummary Pipeline::run_generation() {
  load_inputs();
  StageSummary summary;
  summary.stage = "generate";
  auto& client = gen_client();
  const auto params = gen_params(cfg_.backend);

  std::vector<const data::Instance*> order;
  for (const auto& inst : dataset_.instances) order.push_back(&inst);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<json> records;
  for (const auto* inst : order) {
    try {
      const auto completions = client.generate_samples(inst->input, params);
      for (int i = 0; i < static_cast<int>(completions.size()); ++i)
        records.push_back(json{{"instance_id", inst->id},
                               {"sample_index", i},
                               {"output", completions[static_cast<size_t>(i)].text}});
    } catch (const std::exception& e) {
      summary.failures.push_back(inst->id + ": " + e.what());
    }
  }
  summary.produced = records.size();
  write_jsonl(cfg_.out_dir / "generations.jsonl", records);
  loaded_ = false;  // pick up the new generations on next access
  return summary;
}

// ---------------------------------------------------------------------------
// stage: gold scoring
// ---------------------------------------------------------------------------

namespace {

/// One reference-based scoring call can feed several metric specs (LLM-Eval
/// emits accuracy + informativeness from a single prompt).
struct ScoringJob {
  std::string template_id;
  std::vector<const MetricSpec*> metrics;
};

std::string join_references(const std::vector<std::string>& refs) {
  std::string out;
  for (size_t i = 0; i < refs.size(); ++i) {
    if (i) out += "\n";
    out += refs[i];
  }
  return out;
}

}  // namespace

StageSummary Pipeline::run_gold_scoring(const std::string& only_template) {
  load_inputs();
  StageSummary summary;
  summary.stage = "score";
  auto& client = score_client();
  BackendConfig scoring_cfg = cfg_.scoring_backend ? *cfg_.scoring_backend : cfg_.backend;
  if (!cfg_.scoring_backend) scoring_cfg.temperature = 0.0;
  const auto params = gen_params(scoring_cfg);

  // group judge-template metrics into jobs
  std::vector<ScoringJob> jobs;
  for (const auto& spec : dataset_.metrics) {
    if (spec.source != MetricSource::llm_judge_template) continue;
    if (!only_template.empty() && spec.template_id != only_template) continue;
    if (spec.template_id == "llm_eval") {
      auto it = std::find_if(jobs.begin(), jobs.end(),
                             [](const ScoringJob& j) { return j.template_id == "llm_eval"; });
      if (it != jobs.end()) {
        it->metrics.push_back(&spec);
        continue;
      }
    }
    jobs.push_back(ScoringJob{spec.template_id, {&spec}});
  }

  // start from whatever scores are already resolved (ingested or earlier runs)
  std::map<std::tuple<std::string, int, std::string>, double> raw_scores;
  for (const auto& s : dataset_.scores)
    raw_scores[{s.instance_id, s.sample_index, s.metric_id}] = s.raw_score;

  auto generate_parsed = [&](const llm::Request& req, auto&& parse) {
    std::string reminder;
    for (int attempt = 0;; ++attempt) {
      const auto completion = client.generate(
          llm::Request{req.system, req.user + reminder}, params);
      try {
        return parse(completion.text);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::parse || attempt >= cfg_.parse_retries) throw;
        reminder = "\n\nRespond with only the requested score format.";
      }
    }
  };

  for (const auto& job : jobs) {
    for (const auto& inst : dataset_.instances) {
      const auto out_it = outputs_.find(inst.id);
      if (out_it == outputs_.end()) continue;
      for (const auto& [sample_index, output] : out_it->second) {
        try {
          if (job.template_id == "llm_eval") {
            if (inst.references.empty())
              fail(ErrorKind::integrity, "llm_eval requires references");
            const auto prompt = prompts::render_llm_eval(inst.input, output,
                                                         join_references(inst.references));
            const json scores = generate_parsed(llm::Request{"", prompt},
                                                [](const std::string& t) {
                                                  return parse_llm_eval_scores(t);
                                                });
            for (const auto* spec : job.metrics) {
              const auto key_it = spec->template_args.find("key");
              const std::string key =
                  key_it != spec->template_args.end() ? key_it->second : spec->metric_id;
              if (!scores.contains(key) || !scores[key].is_number())
                fail(ErrorKind::parse, "LLM-Eval response missing key '" + key + "'");
              const double raw = scores[key].get<double>();
              data::normalize_score(raw, *spec);  // validates the scale
              raw_scores[{inst.id, sample_index, spec->metric_id}] = raw;
            }
            continue;
          }

          const auto* spec = job.metrics[0];
          auto arg = [&](const char* name, const std::string& fallback = {}) {
            const auto it = spec->template_args.find(name);
            return it != spec->template_args.end() ? it->second : fallback;
          };
          double raw = 0.0;
          if (job.template_id == "g_eval") {
            const std::string metric_name = arg("metric_name", spec->metric_id);
            std::string criteria = arg("criteria");
            if (criteria.empty()) {
              const auto& builtin = prompts::g_eval_criteria();
              const auto it = builtin.find(metric_name);
              if (it == builtin.end())
                fail(ErrorKind::config, "no G-Eval criteria for metric '" + metric_name + "'");
              criteria = it->second;
            }
            const auto prompt = prompts::render_g_eval(metric_name, criteria, inst.input, output);
            raw = generate_parsed(llm::Request{"", prompt}, [&](const std::string& t) {
              return parse_scalar_after(t, metric_name + ":", /*required=*/false);
            });
          } else if (job.template_id == "gemba_ref") {
            if (inst.references.empty()) fail(ErrorKind::integrity, "gemba_ref requires references");
            const auto prompt = prompts::render_gemba_ref(
                arg("source_lang", "English"), arg("target_lang", "Spanish"), inst.input, output,
                join_references(inst.references));
            raw = generate_parsed(llm::Request{"", prompt}, [](const std::string& t) {
              return parse_scalar_after(t, "Score:", /*required=*/false);
            });
          } else if (job.template_id == "codejudge_functional") {
            if (inst.references.empty())
              fail(ErrorKind::integrity, "codejudge_functional requires a reference");
            const auto prompt = prompts::render_codejudge_functional(
                arg("instr"), inst.input, inst.references.front(), output);
            raw = generate_parsed(llm::Request{"", prompt}, [](const std::string& t) {
              return parse_scalar_after(t, "Functional Correctness", /*required=*/false);
            });
          } else if (job.template_id == "codejudge_inconsistency") {
            const auto prompt = prompts::render_codejudge_inconsistency(inst.input, output);
            raw = generate_parsed(llm::Request{"", prompt}, [](const std::string& t) {
              return parse_codejudge_inconsistency(t);
            });
          } else if (job.template_id == "biggen") {
            std::string rubric = arg("rubric");
            if (inst.extra.contains("rubric")) rubric = inst.extra["rubric"].get<std::string>();
            if (rubric.empty()) fail(ErrorKind::config, "biggen requires a rubric");
            const auto p = prompts::render_biggen_judge(inst.input, output, rubric);
            raw = generate_parsed(llm::Request{p.system, p.user}, [](const std::string& t) {
              return parse_scalar_after(t, "[RESULT]", /*required=*/true);
            });
          } else {
            fail(ErrorKind::config, "unknown scoring template '" + job.template_id + "'");
          }
          data::normalize_score(raw, *spec);  // validates the scale
          raw_scores[{inst.id, sample_index, spec->metric_id}] = raw;
        } catch (const std::exception& e) {
          summary.failures.push_back(inst.id + "#" + std::to_string(sample_index) + " [" +
                                     job.template_id + "]: " + e.what());
        }
      }
    }
  }

  std::vector<json> records;
  for (const auto& [key, raw] : raw_scores)
    records.push_back(json{{"instance_id", std::get<0>(key)},
                           {"sample_index", std::get<1>(key)},
                           {"metric_id", std::get<2>(key)},
                           {"raw_score", raw}});
  summary.produced = records.size();
  write_jsonl(cfg_.out_dir / "scores.jsonl", records);
  loaded_ = false;
  return summary;
}

StageSummary Pipeline::ingest_scores(const std::filesystem::path& raw_scores_file) {
  load_inputs();
  StageSummary summary;
  summary.stage = "ingest";
  std::map<std::tuple<std::string, int, std::string>, double> raw_scores;
  for (const auto& s : dataset_.scores)
    raw_scores[{s.instance_id, s.sample_index, s.metric_id}] = s.raw_score;

  read_jsonl(raw_scores_file, [&](size_t line_no, const json& rec) {
    const std::string where = raw_scores_file.string() + ":" + std::to_string(line_no);
    const std::string metric_id = rec.at("metric_id").get<std::string>();
    const auto* spec = dataset_.find_metric(metric_id);
    if (!spec) fail(ErrorKind::integrity, where + ": unknown metric " + metric_id);
    const double raw = rec.at("raw_score").get<double>();
    data::normalize_score(raw, *spec);
    raw_scores[{rec.at("instance_id").get<std::string>(), rec.at("sample_index").get<int>(),
                metric_id}] = raw;
  });

  std::vector<json> records;
  for (const auto& [key, raw] : raw_scores)
    records.push_back(json{{"instance_id", std::get<0>(key)},
                           {"sample_index", std::get<1>(key)},
                           {"metric_id", std::get<2>(key)},
                           {"raw_score", raw}});
  summary.produced = records.size();
  write_jsonl(cfg_.out_dir / "scores.jsonl", records);
  loaded_ = false;
  return summary;
}

// ---------------------------------------------------------------------------
// stage: featurize
// ---------------------------------------------------------------------------

confidence::SimilarityMatrix Pipeline::build_similarity(const std::string& instance_id,
                                                        const std::vector<std::string>& outputs) {
  if (cfg_.similarity_backend == "lexical_rouge_l")
    return confidence::pairwise_similarity_lexical(outputs);

  if (cfg_.similarity_backend == "llm_entailment") {
    const int n = static_cast<int>(outputs.size());
    auto& client = gen_client();
    const auto params = gen_params(cfg_.backend);
    std::vector<double> directional(static_cast<size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto prompt = prompts::render_entailment(outputs[i], outputs[j]);
        const auto completion = client.generate(prompt, params);
        const std::string body = confidence::extract_first_json_object(completion.text);
        json obj = json::parse(body, nullptr, false);
        if (obj.is_discarded() || !obj.contains("probability") || !obj["probability"].is_number())
          fail(ErrorKind::parse, "entailment response missing numeric probability");
        const double p = obj["probability"].get<double>();
        if (p < 0.0 || p > 1.0) fail(ErrorKind::parse, "entailment probability outside [0,1]");
        directional[static_cast<size_t>(i) * n + j] = p;
      }
    return confidence::symmetrize(directional, n, "llm_entailment");
  }

  if (cfg_.similarity_backend == "precomputed") {
    const auto path = resolve("similarity.jsonl");
    if (!std::filesystem::exists(path))
      fail(ErrorKind::io, "precomputed similarity backend needs similarity.jsonl");
    confidence::SimilarityMatrix found;
    bool ok = false;
    read_jsonl(path, [&](size_t, const json& rec) {
      if (ok || rec.at("instance_id").get<std::string>() != instance_id) return;
      const int n = rec.at("n").get<int>();
      found = confidence::pairwise_similarity_precomputed(
          rec.at("entries").get<std::vector<double>>(), n);
      ok = true;
    });
    if (!ok) fail(ErrorKind::integrity, "no precomputed similarity for instance " + instance_id);
    if (found.n != static_cast<int>(outputs.size()))
      fail(ErrorKind::integrity, "precomputed similarity shape mismatch for " + instance_id);
    return found;
  }

  fail(ErrorKind::config, "unknown similarity backend '" + cfg_.similarity_backend + "'");
}

StageSummary Pipeline::run_featurize() {
  load_inputs();
  StageSummary summary;
  summary.stage = "featurize";
  auto& client = gen_client();
  const auto params = gen_params(cfg_.backend);

  auto generate_parsed = [&](const std::string& prompt, int sample_index, auto&& parse)
      -> decltype(parse(std::string{})) {
    std::string reminder;
    for (int attempt = 0;; ++attempt) {
      const auto completion = client.generate(prompt + reminder, params, sample_index);
      try {
        return parse(completion.text);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::parse || attempt >= cfg_.parse_retries) throw;
        reminder = "\n\nRespond with only the JSON object.";
      }
    }
  };

  std::vector<std::string> ids;
  for (const auto& [id, _] : outputs_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  std::vector<json> feature_records;
  std::vector<json> verbalized_records;

  for (const auto& id : ids) {
    const auto& samples = outputs_.at(id);
    std::vector<std::string> texts;
    for (const auto& [_, text] : samples) texts.push_back(text);
    const auto* inst = dataset_.find_instance(id);
    if (!inst) continue;

    // consistency block (shared across the instance's samples)
    std::map<std::string, double> shared;
    std::vector<double> degmat_resp, ecc_resp;
    if (texts.size() >= 2) {
      try {
        const auto sim = build_similarity(id, texts);
        const auto deg = confidence::degmat(sim);
        const auto ecc =
            confidence::eccentricity(sim, std::min<int>(cfg_.ecc_k, sim.n));
        shared[confidence::kDegMat] = deg.uncertainty;
        shared[confidence::kEcc] = ecc.uncertainty;
        shared[confidence::kEigV] = confidence::eigv(sim);
        shared[confidence::kNumSet] =
            static_cast<double>(confidence::num_semantic_sets(sim, cfg_.numset_tau));
        shared[confidence::kLexSim] = confidence::lexsim(texts);
        degmat_resp = deg.confidence;
        ecc_resp = ecc.confidence;
      } catch (const std::exception& e) {
        summary.failures.push_back(id + " [consistency]: " + e.what());
      }
    }

    // verbalized 1S: one extra call per instance, answer kept distinct
    try {
      const auto v1 = generate_parsed(prompts::render_verbalized_1s(inst->input), 0,
                                      [](const std::string& t) {
                                        return confidence::parse_verbalized_1s(t);
                                      });
      shared[confidence::kVerb1S] = v1.confidence;
      verbalized_records.push_back(
          json{{"instance_id", id}, {"answer", v1.answer}, {"confidence", v1.confidence}});
    } catch (const std::exception& e) {
      summary.failures.push_back(id + " [verbalized_1s]: " + e.what());
    }

    for (size_t k = 0; k < samples.size(); ++k) {
      const auto& [sample_index, text] = samples[k];
      FeatureVector fv;
      fv.instance_id = id;
      fv.sample_index = sample_index;
      fv.features = shared;
      if (k < degmat_resp.size()) fv.features[confidence::kDegMatResp] = degmat_resp[k];
      if (k < ecc_resp.size()) fv.features[confidence::kEccResp] = ecc_resp[k];
      try {
        fv.features[confidence::kVerb2S] =
            generate_parsed(prompts::render_verbalized_2s(inst->input, text), sample_index,
                            [](const std::string& t) {
                              return confidence::parse_verbalized_2s(t);
                            });
      } catch (const std::exception& e) {
        summary.failures.push_back(id + "#" + std::to_string(sample_index) +
                                   " [verbalized_2s]: " + e.what());
      }

      json feats = json::object();
      for (const auto& [fid, value] : fv.features) feats[fid] = value;
      feature_records.push_back(
          json{{"instance_id", id}, {"sample_index", sample_index}, {"features", feats}});
    }
  }

  summary.produced = feature_records.size();
  write_jsonl(cfg_.out_dir / "features.jsonl", feature_records);
  write_jsonl(cfg_.out_dir / "verbalized.jsonl", verbalized_records);
  loaded_ = false;
  return summary;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

std::vector<Pipeline::Row> Pipeline::metric_rows(const std::string& metric_id,
                                                 const std::vector<std::string>& instance_ids) const {
  std::vector<Row> rows;
  const auto metric_it = gold_.find(metric_id);
  if (metric_it == gold_.end()) return rows;
  const std::set<std::string> wanted(instance_ids.begin(), instance_ids.end());
  for (const auto& [key, score] : metric_it->second) {
    if (!wanted.count(key.first)) continue;
    Row row;
    row.instance_id = key.first;
    row.sample_index = key.second;
    row.gold = score;
    const auto f = features_.find(key);
    row.features = f != features_.end() ? &f->second : nullptr;
    rows.push_back(std::move(row));
  }
  // std::map iteration is already (instance, sample)-sorted
  return rows;
}

namespace {

struct CellScores {
  std::vector<double> points, golds, crps_values;
  std::vector<std::pair<double, double>> intervals;
  size_t failed = 0;
};

EvalReport finalize_report(const std::string& dataset_id, const std::string& metric_id,
                           const std::string& method_id, const std::string& model_kind,
                           size_t n_train, double alpha, CellScores&& cell) {
  EvalReport rep;
  rep.dataset_id = dataset_id;
  rep.metric_id = metric_id;
  rep.method_id = method_id;
  rep.model_kind = model_kind;
  rep.n_train = n_train;
  rep.n_instances = cell.points.size();
  rep.n_failed = cell.failed;
  rep.nominal_p = 1.0 - alpha;
  if (!cell.points.empty()) {
    rep.rmse = evaluation::rmse(cell.points, cell.golds);
    rep.crps_mean = mathx::mean(cell.crps_values);
    try {
      rep.pearson = evaluation::pearson(cell.points, cell.golds);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined && e.kind() != ErrorKind::arity) throw;
    }
    const auto a = evaluation::ace(cell.intervals, cell.golds, rep.nominal_p);
    rep.picp = evaluation::picp(cell.intervals, cell.golds);
    rep.ace = a.ace;
    rep.ace_signed = a.signed_gap;
  }
  return rep;
}

}  // namespace

std::vector<EvalReport> Pipeline::run_benchmark() {
  load_inputs();
  std::vector<EvalReport> reports;
  std::vector<json> judge_prediction_records;

  for (const auto& spec : dataset_.metrics) {
    const auto train_rows = metric_rows(spec.metric_id, split_.train);
    const auto dev_rows = metric_rows(spec.metric_id, split_.dev);
    const auto test_rows = metric_rows(spec.metric_id, split_.test);
    if (train_rows.empty() || test_rows.empty()) {
      // the grid stays |methods| x |metrics|: a dataless metric is a row of
      // empty cells, not a silent omission
      for (const auto& feature_id : cfg_.features)
        reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id, feature_id, "", 0,
                                          cfg_.alpha, CellScores{}));
      for (const int shots : cfg_.judge_shots)
        reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id,
                                          "judge_" + std::to_string(shots) + "shot", "",
                                          static_cast<size_t>(shots), cfg_.alpha, CellScores{}));
      continue;
    }

    // CE-Reg columns: one single-feature regression per confidence feature
    for (const auto& feature_id : cfg_.features) {
      auto project = [&](const std::vector<Row>& rows) {
        std::pair<std::vector<std::vector<double>>, std::vector<double>> out;
        for (const auto& row : rows) {
          if (!row.features) continue;
          const auto it = row.features->features.find(feature_id);
          if (it == row.features->features.end()) continue;
          out.first.push_back({it->second});
          out.second.push_back(row.gold);
        }
        return out;
      };
      const auto [train_x, train_y] = project(train_rows);
      if (train_x.size() < 2) {
        // keep the grid complete: the cell is reported empty, not dropped
        CellScores empty;
        empty.failed = test_rows.size();
        reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id, feature_id, "",
                                          train_x.size(), cfg_.alpha, std::move(empty)));
        continue;
      }

      // fit every configured regressor, select by dev CRPS
      std::unique_ptr<FittedRegressor> best;
      double best_crps = std::numeric_limits<double>::infinity();
      std::string best_kind;
      for (const auto kind : cfg_.model_kinds) {
        const uint64_t fit_seed = derive_seed(
            cfg_.seed, "fit/" + spec.metric_id + "/" + feature_id + "/" +
                           regression::model_kind_name(kind));
        auto model = regression::fit_matrix(kind, train_x, {feature_id}, train_y, fit_seed,
                                            cfg_.regression);
        double dev_crps = 0.0;
        size_t dev_n = 0;
        for (const auto& row : dev_rows) {
          if (!row.features || !row.features->features.count(feature_id)) continue;
          const auto dist = model->predict_distribution(*row.features);
          dev_crps += evaluation::crps(dist, row.gold);
          ++dev_n;
        }
        dev_crps = dev_n ? dev_crps / static_cast<double>(dev_n)
                         : std::numeric_limits<double>::infinity();
        if (dev_crps < best_crps) {
          best_crps = dev_crps;
          best = std::move(model);
          best_kind = regression::model_kind_name(kind);
        }
      }
      if (!best) continue;

      CellScores cell;
      for (const auto& row : test_rows) {
        if (!row.features || !row.features->features.count(feature_id)) {
          ++cell.failed;
          continue;
        }
        const auto dist = best->predict_distribution(*row.features);
        const auto pred = regression::clamp_unit(regression::central_interval(dist, cfg_.alpha));
        cell.points.push_back(pred.point);
        cell.golds.push_back(row.gold);
        cell.intervals.emplace_back(pred.lower, pred.upper);
        cell.crps_values.push_back(evaluation::crps(dist, row.gold));
      }
      reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id, feature_id,
                                        best_kind, train_x.size(), cfg_.alpha, std::move(cell)));
    }

    // RF-LLMaaJ columns
    auto output_of = [&](const Row& row) -> const std::string* {
      const auto it = outputs_.find(row.instance_id);
      if (it == outputs_.end()) return nullptr;
      for (const auto& [k, text] : it->second)
        if (k == row.sample_index) return &text;
      return nullptr;
    };

    for (const int shots : cfg_.judge_shots) {
      const std::string method_id = "judge_" + std::to_string(shots) + "shot";
      std::vector<prompts::JudgeDemo> demos;
      bool demos_ok = train_rows.size() >= static_cast<size_t>(shots);
      if (demos_ok) {
        for (const size_t di : judge::select_demo_indices(train_rows.size(), shots, cfg_.seed)) {
          const auto& row = train_rows[di];
          const auto* inst = dataset_.find_instance(row.instance_id);
          const auto* out = output_of(row);
          if (!inst || !out) {
            demos_ok = false;
            break;
          }
          demos.push_back(prompts::JudgeDemo{inst->input, *out, row.gold});
        }
      }
      if (!demos_ok) {
        CellScores empty;
        empty.failed = test_rows.size();
        reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id, method_id, "",
                                          static_cast<size_t>(shots), cfg_.alpha,
                                          std::move(empty)));
        continue;
      }

      auto& client = gen_client();
      const auto params = gen_params(cfg_.backend);
      CellScores cell;
      for (const auto& row : test_rows) {
        const auto* inst = dataset_.find_instance(row.instance_id);
        const auto* out = output_of(row);
        if (!inst || !out) {
          ++cell.failed;
          continue;
        }
        judge::JudgeConfig jcfg;
        jcfg.shots = shots;
        jcfg.metric_description = spec.description.empty() ? spec.metric_id : spec.description;
        jcfg.task_context = inst->task_context;
        jcfg.seed = cfg_.seed;
        try {
          const auto pred = judge::judge_predict(jcfg, demos, inst->input, *out, client, params);
          const auto dist = judge::interval_to_distribution(pred);
          cell.points.push_back(pred.point);
          cell.golds.push_back(row.gold);
          cell.intervals.emplace_back(pred.lower, pred.upper);
          cell.crps_values.push_back(evaluation::crps(dist, row.gold));
          judge_prediction_records.push_back(json{
              {"instance_id", row.instance_id},
              {"sample_index", row.sample_index},
              {"metric_id", spec.metric_id},
              {"shots", shots},
              {"point", pred.point},
              {"lower", pred.lower},
              {"upper", pred.upper},
              {"alpha", pred.alpha},
              {"bounds_swapped", pred.bounds_swapped},
              {"clamped", pred.clamped},
              {"asymmetric", pred.asymmetric}});
        } catch (const std::exception& e) {
          ++cell.failed;
          judge_prediction_records.push_back(json{{"instance_id", row.instance_id},
                                                  {"sample_index", row.sample_index},
                                                  {"metric_id", spec.metric_id},
                                                  {"shots", shots},
                                                  {"failed", true},
                                                  {"error", std::string(e.what())}});
        }
      }
      reports.push_back(finalize_report(dataset_.dataset_id, spec.metric_id, method_id, "",
                                        static_cast<size_t>(shots), cfg_.alpha, std::move(cell)));
    }
  }

  write_jsonl(cfg_.out_dir / "judge_predictions.jsonl", judge_prediction_records);
  return reports;
}

// ---------------------------------------------------------------------------
// learning curve
// ---------------------------------------------------------------------------

std::vector<size_t> Pipeline::default_sizes(size_t train_rows) const {
  std::vector<size_t> sizes;
  for (size_t n = 4; n < train_rows; n *= 2) sizes.push_back(n);
  if (train_rows >= 2 && (sizes.empty() || sizes.back() != train_rows))
    sizes.push_back(train_rows);
  return sizes;
}

std::vector<CurveCell> Pipeline::run_learning_curve() {
  load_inputs();
  std::vector<CurveCell> cells;

  for (const auto& spec : dataset_.metrics) {
    const auto train_rows = metric_rows(spec.metric_id, split_.train);
    const auto test_rows = metric_rows(spec.metric_id, split_.test);
    if (train_rows.empty() || test_rows.empty()) continue;

    for (const auto& feature_id : cfg_.features) {
      // usable pools: rows that carry this feature
      std::vector<size_t> pool;
      for (size_t i = 0; i < train_rows.size(); ++i)
        if (train_rows[i].features && train_rows[i].features->features.count(feature_id))
          pool.push_back(i);
      if (pool.size() < 2) continue;

      std::vector<std::pair<std::vector<double>, double>> test_xy;
      for (const auto& row : test_rows)
        if (row.features && row.features->features.count(feature_id))
          test_xy.push_back({{row.features->features.at(feature_id)}, row.gold});
      if (test_xy.empty()) continue;

      const auto sizes = cfg_.train_sizes.empty() ? default_sizes(pool.size()) : cfg_.train_sizes;
      for (const auto kind : cfg_.model_kinds) {
        for (const size_t n : sizes) {
          if (n > pool.size()) {
            std::fprintf(stderr,
                         "learning-curve: skipping N=%zu for %s/%s/%s (train pool has %zu rows)\n",
                         n, spec.metric_id.c_str(), feature_id.c_str(),
                         regression::model_kind_name(kind), pool.size());
            continue;
          }
          std::vector<double> rmses, crpss;
          for (const uint64_t rep : cfg_.curve_seeds) {
            const uint64_t sub_seed = derive_seed(rep, "curve/subsample/" + spec.metric_id);
            const auto picked = data::subsample_indices(pool.size(), n, sub_seed);
            std::vector<std::vector<double>> x;
            std::vector<double> y;
            for (const size_t p : picked) {
              const auto& row = train_rows[pool[p]];
              x.push_back({row.features->features.at(feature_id)});
              y.push_back(row.gold);
            }
            const uint64_t fit_seed = derive_seed(
                cfg_.seed, "curve/fit/" + spec.metric_id + "/" + feature_id + "/" +
                               regression::model_kind_name(kind) + "/" + std::to_string(n) + "/" +
                               std::to_string(rep));
            auto model = regression::fit_matrix(kind, x, {feature_id}, y, fit_seed,
                                                cfg_.regression);
            std::vector<double> points, golds, crps_vals;
            for (const auto& [tx, gold] : test_xy) {
              const auto dist = model->predict_row(tx);
              const auto pred =
                  regression::clamp_unit(regression::central_interval(dist, cfg_.alpha));
              points.push_back(pred.point);
              golds.push_back(gold);
              crps_vals.push_back(evaluation::crps(dist, gold));
            }
            rmses.push_back(evaluation::rmse(points, golds));
            crpss.push_back(mathx::mean(crps_vals));
          }
          CurveCell cell;
          cell.metric_id = spec.metric_id;
          cell.method_id = feature_id;
          cell.model_kind = regression::model_kind_name(kind);
          cell.n_train = n;
          cell.reps = rmses.size();
          cell.rmse_mean = mathx::mean(rmses);
          cell.crps_mean = mathx::mean(crpss);
          cell.rmse_sd = rmses.size() > 1 ? std::sqrt(mathx::sample_variance(rmses)) : 0.0;
          cell.crps_sd = crpss.size() > 1 ? std::sqrt(mathx::sample_variance(crpss)) : 0.0;
          cells.push_back(std::move(cell));
        }
      }
    }

    // judge rows, capped at 16 shots by construction
    if (cfg_.curve_include_judge) {
      auto output_of = [&](const Row& row) -> const std::string* {
        const auto it = outputs_.find(row.instance_id);
        if (it == outputs_.end()) return nullptr;
        for (const auto& [k, text] : it->second)
          if (k == row.sample_index) return &text;
        return nullptr;
      };
      auto& client = gen_client();
      const auto params = gen_params(cfg_.backend);
      for (const int shots : cfg_.judge_shots) {
        if (train_rows.size() < static_cast<size_t>(shots)) continue;
        std::vector<double> rmses, crpss;
        for (const uint64_t rep : cfg_.curve_seeds) {
          const auto demo_idx = judge::select_demo_indices(train_rows.size(), shots, rep);
          std::vector<prompts::JudgeDemo> demos;
          for (const size_t di : demo_idx) {
            const auto& row = train_rows[di];
            const auto* inst = dataset_.find_instance(row.instance_id);
            const auto* out = output_of(row);
            if (inst && out) demos.push_back(prompts::JudgeDemo{inst->input, *out, row.gold});
          }
          if (static_cast<int>(demos.size()) != shots) continue;
          std::vector<double> points, golds, crps_vals;
          for (const auto& row : test_rows) {
            const auto* inst = dataset_.find_instance(row.instance_id);
            const auto* out = output_of(row);
            if (!inst || !out) continue;
            judge::JudgeConfig jcfg;
            jcfg.shots = shots;
            jcfg.metric_description = spec.description.empty() ? spec.metric_id : spec.description;
            jcfg.task_context = inst->task_context;
            jcfg.seed = rep;
            try {
              const auto pred = judge::judge_predict(jcfg, demos, inst->input, *out, client, params);
              const auto dist = judge::interval_to_distribution(pred);
              points.push_back(pred.point);
              golds.push_back(row.gold);
              crps_vals.push_back(evaluation::crps(dist, row.gold));
            } catch (const std::exception&) {
              // parse failures are tallied by the benchmark path
            }
          }
          if (points.size() < 2) continue;
          rmses.push_back(evaluation::rmse(points, golds));
          crpss.push_back(mathx::mean(crps_vals));
        }
        if (rmses.empty()) continue;
        CurveCell cell;
        cell.metric_id = spec.metric_id;
        cell.method_id = "judge";
        cell.model_kind = "";
        cell.n_train = static_cast<size_t>(shots);
        cell.reps = rmses.size();
        cell.rmse_mean = mathx::mean(rmses);
        cell.crps_mean = mathx::mean(crpss);
        cell.rmse_sd = rmses.size() > 1 ? std::sqrt(mathx::sample_variance(rmses)) : 0.0;
        cell.crps_sd = crpss.size() > 1 ? std::sqrt(mathx::sample_variance(crpss)) : 0.0;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// report emission
// ---------------------------------------------------------------------------

void Pipeline::write_reports(const std::vector<EvalReport>& reports) const {
  std::vector<json> records;
  for (const auto& r : reports) {
    json rec{{"dataset", r.dataset_id},
             {"metric", r.metric_id},
             {"method", r.method_id},
             {"model_kind", r.model_kind},
             {"n_train", r.n_train},
             {"n_instances", r.n_instances},
             {"n_failed", r.n_failed},
             {"rmse", r.rmse},
             {"crps", r.crps_mean},
             {"picp", r.picp},
             {"ace", r.ace},
             {"ace_signed", r.ace_signed},
             {"p", r.nominal_p}};
    if (r.pearson)
      rec["pearson"] = *r.pearson;
    else
      rec["pearson"] = nullptr;
    records.push_back(std::move(rec));
  }
  write_jsonl(cfg_.out_dir / "records.jsonl", records);

  // column order: configured features, then judge columns
  std::vector<std::string> columns = cfg_.features;
  for (const int shots : cfg_.judge_shots)
    columns.push_back("judge_" + std::to_string(shots) + "shot");

  auto emit_table = [&](const std::string& name, auto&& value_of) {
    std::ostringstream out;
    out << "dataset\tmetric";
    for (const auto& c : columns) out << '\t' << c;
    out << '\n';
    std::vector<std::pair<std::string, std::string>> keys;  // (dataset, metric)
    for (const auto& r : reports)
      if (std::find(keys.begin(), keys.end(),
                    std::make_pair(r.dataset_id, r.metric_id)) == keys.end())
        keys.emplace_back(r.dataset_id, r.metric_id);
    for (const auto& key : keys) {
      const std::string& ds = key.first;
      const std::string& metric = key.second;
      out << ds << '\t' << metric;
      for (const auto& col : columns) {
        const auto it = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) {
          return r.dataset_id == ds && r.metric_id == metric && r.method_id == col;
        });
        if (it == reports.end() || it->n_instances == 0) {
          out << "\tNA";
          continue;
        }
        const auto v = value_of(*it);
        out << '\t' << (v ? fmt_cell(*v) : "NA");
      }
      out << '\n';
    }
    write_text_file(cfg_.out_dir / name, out.str());
  };

  emit_table("report_rmse.tsv", [](const EvalReport& r) -> std::optional<double> { return r.rmse; });
  emit_table("report_crps.tsv",
             [](const EvalReport& r) -> std::optional<double> { return r.crps_mean; });
  emit_table("report_pc.tsv", [](const EvalReport& r) -> std::optional<double> { return r.pearson; });
  emit_table("report_ace.tsv",
             [](const EvalReport& r) -> std::optional<double> { return r.ace_signed; });
  emit_table("report_picp.tsv", [](const EvalReport& r) -> std::optional<double> { return r.picp; });
}

void Pipeline::write_curve(const std::vector<CurveCell>& cells) const {
  std::vector<json> records;
  std::ostringstream table;
  table << "metric\tmethod\tmodel_kind\tn_train\treps\trmse_mean\trmse_sd\tcrps_mean\tcrps_sd\n";
  for (const auto& c : cells) {
    records.push_back(json{{"metric", c.metric_id},
                           {"method", c.method_id},
                           {"model_kind", c.model_kind},
                           {"n_train", c.n_train},
                           {"reps", c.reps},
                           {"rmse_mean", c.rmse_mean},
                           {"rmse_sd", c.rmse_sd},
                           {"crps_mean", c.crps_mean},
                           {"crps_sd", c.crps_sd}});
    table << c.metric_id << '\t' << c.method_id << '\t' << c.model_kind << '\t' << c.n_train
          << '\t' << c.reps << '\t' << fmt_cell(c.rmse_mean) << '\t' << fmt_cell(c.rmse_sd) << '\t'
          << fmt_cell(c.crps_mean) << '\t' << fmt_cell(c.crps_sd) << '\n';
  }
  write_jsonl(cfg_.out_dir / "learning_curve_records.jsonl", records);
  write_text_file(cfg_.out_dir / "learning_curve.tsv", table.str());
}

// ---------------------------------------------------------------------------
// single-model utilities (fit / predict / evaluate subcommands)
// ---------------------------------------------------------------------------

std::unique_ptr<FittedRegressor> Pipeline::fit_single(const std::string& metric_id,
                                                      const std::vector<std::string>& feature_ids,
                                                      ModelKind kind) {
  load_inputs();
  const auto rows = metric_rows(metric_id, split_.train);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& row : rows) {
    if (!row.features) continue;
    std::vector<double> vec;
    bool ok = true;
    for (const auto& fid : feature_ids) {
      const auto it = row.features->features.find(fid);
      if (it == row.features->features.end()) {
        ok = false;
        break;
      }
      vec.push_back(it->second);
    }
    if (!ok) continue;
    x.push_back(std::move(vec));
    y.push_back(row.gold);
  }
  const uint64_t fit_seed =
      derive_seed(cfg_.seed, "fit/" + metric_id + "/" + regression::model_kind_name(kind));
  return regression::fit_matrix(kind, x, feature_ids, y, fit_seed, cfg_.regression);
}

StageSummary Pipeline::predict_split(const FittedRegressor& model, const std::string& metric_id,
                                     const std::string& split_name,
                                     const std::filesystem::path& out_file) {
  load_inputs();
  StageSummary summary;
  summary.stage = "predict";
  const std::vector<std::string>* ids = nullptr;
  if (split_name == "train")
    ids = &split_.train;
  else if (split_name == "dev")
    ids = &split_.dev;
  else if (split_name == "test")
    ids = &split_.test;
  else
    fail(ErrorKind::config, "unknown split '" + split_name + "'");

  std::vector<json> records;
  for (const auto& row : metric_rows(metric_id, *ids)) {
    if (!row.features) {
      summary.failures.push_back(row.instance_id + "#" + std::to_string(row.sample_index) +
                                 ": no features");
      continue;
    }
    try {
      const auto dist = model.predict_distribution(*row.features);
      const auto pred = regression::clamp_unit(regression::central_interval(dist, cfg_.alpha));
      json rec{{"instance_id", row.instance_id},
               {"sample_index", row.sample_index},
               {"metric_id", metric_id},
               {"method", regression::model_kind_name(model.kind())},
               {"point", pred.point},
               {"lower", pred.lower},
               {"upper", pred.upper},
               {"alpha", pred.alpha},
               {"clamped", pred.clamped},
               {"dist", dist_to_json(dist)}};
      if (pred.raw_point) rec["raw_point"] = *pred.raw_point;
      if (pred.raw_lower) rec["raw_lower"] = *pred.raw_lower;
      if (pred.raw_upper) rec["raw_upper"] = *pred.raw_upper;
      records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      summary.failures.push_back(row.instance_id + "#" + std::to_string(row.sample_index) + ": " +
                                 e.what());
    }
  }
  summary.produced = records.size();
  write_jsonl(out_file, records);
  return summary;
}

EvalReport Pipeline::evaluate_predictions(const std::filesystem::path& predictions_file,
                                          const std::string& metric_id,
                                          const std::string& method_id) {
  load_inputs();
  const auto metric_it = gold_.find(metric_id);
  if (metric_it == gold_.end()) fail(ErrorKind::config, "no gold scores for metric " + metric_id);

  CellScores cell;
  read_jsonl(predictions_file, [&](size_t, const json& rec) {
    if (rec.value("failed", false)) {
      ++cell.failed;
      return;
    }
    const std::pair<std::string, int> key{rec.at("instance_id").get<std::string>(),
                                          rec.at("sample_index").get<int>()};
    const auto gold_it = metric_it->second.find(key);
    if (gold_it == metric_it->second.end()) {
      ++cell.failed;
      return;
    }
    const double gold = gold_it->second;
    cell.points.push_back(rec.at("point").get<double>());
    cell.golds.push_back(gold);
    cell.intervals.emplace_back(rec.at("lower").get<double>(), rec.at("upper").get<double>());
    if (rec.contains("dist"))
      cell.crps_values.push_back(evaluation::crps(dist_from_json(rec["dist"]), gold));
    else
      cell.crps_values.push_back(evaluation::crps(
          regression::make_interval_only(rec.at("point").get<double>(),
                                         rec.at("lower").get<double>(),
                                         rec.at("upper").get<double>()),
          gold));
  });
  return finalize_report(dataset_.dataset_id, metric_id, method_id, "", 0, cfg_.alpha,
                         std::move(cell));
}

}  // namespace perfpred::harness
