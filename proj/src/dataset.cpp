#include "perfpred/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "perfpred/error.hpp"
#include "perfpred/rng.hpp"

namespace perfpred::data {

const Instance* Dataset::find_instance(const std::string& id) const {
  for (const auto& inst : instances)
    if (inst.id == id) return &inst;
  return nullptr;
}

const MetricSpec* Dataset::find_metric(const std::string& metric_id) const {
  for (const auto& m : metrics)
    if (m.metric_id == metric_id) return &m;
  return nullptr;
}

std::vector<const Generation*> Dataset::generations_of(const std::string& instance_id) const {
  std::vector<const Generation*> out;
  for (const auto& g : generations)
    if (g.instance_id == instance_id) out.push_back(&g);
  std::sort(out.begin(), out.end(),
            [](const Generation* a, const Generation* b) { return a->sample_index < b->sample_index; });
  return out;
}

double normalize_score(double raw, const MetricSpec& spec) {
  if (!(spec.scale_min < spec.scale_max))
    fail(ErrorKind::integrity, "metric " + spec.metric_id + ": scale_min must be < scale_max");
  if (raw < spec.scale_min || raw > spec.scale_max)
    fail(ErrorKind::range, "metric " + spec.metric_id + ": raw score " + std::to_string(raw) +
                               " outside scale [" + std::to_string(spec.scale_min) + ", " +
                               std::to_string(spec.scale_max) + "]");
  return (raw - spec.scale_min) / (spec.scale_max - spec.scale_min);
}

namespace {

std::string require_string(const json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_string())
    fail(ErrorKind::parse, where + ": missing or non-string field '" + key + "'");
  return rec[key].get<std::string>();
}

MetricSource parse_source(const std::string& s, const std::string& where) {
  if (s == "ingested") return MetricSource::ingested;
  if (s == "llm_judge_template") return MetricSource::llm_judge_template;
  fail(ErrorKind::parse, where + ": unknown metric source '" + s + "'");
}

}  // namespace

std::vector<MetricSpec> parse_metric_specs(const json& sidecar) {
  const json& arr = sidecar.is_array() ? sidecar : sidecar.at("metrics");
  std::vector<MetricSpec> out;
  std::set<std::string> seen;
  for (const auto& m : arr) {
    MetricSpec spec;
    spec.metric_id = require_string(m, "metric_id", "metrics sidecar");
    spec.scale_min = m.value("scale_min", 0.0);
    spec.scale_max = m.value("scale_max", 1.0);
    spec.higher_is_better = m.value("higher_is_better", true);
    spec.description = m.value("description", std::string{});
    spec.source = parse_source(m.value("source", std::string{"ingested"}), spec.metric_id);
    spec.template_id = m.value("template", std::string{});
    if (m.contains("template_args"))
      for (const auto& [k, v] : m["template_args"].items())
        spec.template_args[k] = v.get<std::string>();
    if (!(spec.scale_min < spec.scale_max))
      fail(ErrorKind::integrity, "metric " + spec.metric_id + ": scale_min must be < scale_max");
    if (spec.source == MetricSource::llm_judge_template && spec.template_id.empty())
      fail(ErrorKind::config, "metric " + spec.metric_id + ": llm_judge_template needs a template");
    if (!seen.insert(spec.metric_id).second)
      fail(ErrorKind::integrity, "duplicate metric_id " + spec.metric_id);
    out.push_back(std::move(spec));
  }
  return out;
}

json metric_spec_to_json(const MetricSpec& spec) {
  json m{{"metric_id", spec.metric_id},
         {"scale_min", spec.scale_min},
         {"scale_max", spec.scale_max},
         {"higher_is_better", spec.higher_is_better},
         {"description", spec.description},
         {"source", spec.source == MetricSource::ingested ? "ingested" : "llm_judge_template"}};
  if (!spec.template_id.empty()) m["template"] = spec.template_id;
  if (!spec.template_args.empty()) {
    json args = json::object();
    for (const auto& [k, v] : spec.template_args) args[k] = v;
    m["template_args"] = args;
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& schema) {
  if (schema != "jsonl") fail(ErrorKind::config, "unknown dataset schema '" + schema + "'");
  if (!std::filesystem::is_directory(dir))
    fail(ErrorKind::io, "dataset directory not found: " + dir.string());

  Dataset ds;
  ds.dataset_id = dir.filename().string();

  const auto metrics_path = dir / "metrics.json";
  if (std::filesystem::exists(metrics_path)) {
    json sidecar = json::parse(read_text_file(metrics_path), nullptr, false);
    if (sidecar.is_discarded()) fail(ErrorKind::parse, metrics_path.string() + ": malformed JSON");
    if (sidecar.contains("dataset_id")) ds.dataset_id = sidecar["dataset_id"].get<std::string>();
    ds.metrics = parse_metric_specs(sidecar);
  }

  std::unordered_set<std::string> instance_ids;
  const auto instances_path = dir / "instances.jsonl";
  if (std::filesystem::exists(instances_path)) {
    read_jsonl(instances_path, [&](size_t line_no, const json& rec) {
      const std::string where = instances_path.string() + ":" + std::to_string(line_no);
      Instance inst;
      inst.id = require_string(rec, "id", where);
      inst.task_id = rec.value("task_id", std::string{});
      inst.input = require_string(rec, "input", where);
      if (inst.input.empty()) fail(ErrorKind::integrity, where + ": empty input");
      if (rec.contains("references"))
        for (const auto& r : rec["references"]) inst.references.push_back(r.get<std::string>());
      inst.task_context = rec.value("task_context", std::string{});
      for (const auto& [k, v] : rec.items())
        if (k != "id" && k != "task_id" && k != "input" && k != "references" && k != "task_context")
          inst.extra[k] = v;
      if (!instance_ids.insert(inst.id).second)
        fail(ErrorKind::integrity, where + ": duplicate instance id '" + inst.id + "'");
      ds.instances.push_back(std::move(inst));
    });
  }

  std::set<std::pair<std::string, int>> gen_keys;
  const auto generations_path = dir / "generations.jsonl";
  if (std::filesystem::exists(generations_path)) {
    read_jsonl(generations_path, [&](size_t line_no, const json& rec) {
      const std::string where = generations_path.string() + ":" + std::to_string(line_no);
      Generation g;
      g.instance_id = require_string(rec, "instance_id", where);
      if (!rec.contains("sample_index") || !rec["sample_index"].is_number_integer())
        fail(ErrorKind::parse, where + ": missing integer sample_index");
      g.sample_index = rec["sample_index"].get<int>();
      if (g.sample_index < 0) fail(ErrorKind::integrity, where + ": negative sample_index");
      g.output = require_string(rec, "output", where);
      if (!instance_ids.count(g.instance_id))
        fail(ErrorKind::integrity, where + ": unknown instance id '" + g.instance_id + "'");
      if (!gen_keys.insert({g.instance_id, g.sample_index}).second)
        fail(ErrorKind::integrity, where + ": duplicate (instance_id, sample_index)");
      ds.generations.push_back(std::move(g));
    });
  }

  std::set<std::tuple<std::string, int, std::string>> score_keys;
  const auto scores_path = dir / "scores.jsonl";
  if (std::filesystem::exists(scores_path)) {
    read_jsonl(scores_path, [&](size_t line_no, const json& rec) {
      const std::string where = scores_path.string() + ":" + std::to_string(line_no);
      ScoredExample s;
      s.instance_id = require_string(rec, "instance_id", where);
      if (!rec.contains("sample_index") || !rec["sample_index"].is_number_integer())
        fail(ErrorKind::parse, where + ": missing integer sample_index");
      s.sample_index = rec["sample_index"].get<int>();
      s.metric_id = require_string(rec, "metric_id", where);
      if (!rec.contains("raw_score") || !rec["raw_score"].is_number())
        fail(ErrorKind::parse, where + ": missing numeric raw_score");
      s.raw_score = rec["raw_score"].get<double>();
      if (!instance_ids.count(s.instance_id))
        fail(ErrorKind::integrity, where + ": unknown instance id '" + s.instance_id + "'");
      const MetricSpec* spec = ds.find_metric(s.metric_id);
      if (!spec) fail(ErrorKind::integrity, where + ": unknown metric id '" + s.metric_id + "'");
      try {
        s.score = normalize_score(s.raw_score, *spec);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::range) fail(ErrorKind::integrity, where + ": " + e.what());
        throw;
      }
      if (!score_keys.insert({s.instance_id, s.sample_index, s.metric_id}).second)
        fail(ErrorKind::integrity, where + ": duplicate (instance, sample, metric) score");
      ds.scores.push_back(std::move(s));
    });
  }

  return ds;
}

DatasetSplit split_dataset(const std::vector<Instance>& instances, std::array<int, 3> ratios,
                           uint64_t seed) {
  if (instances.empty()) fail(ErrorKind::size, "split_dataset: empty dataset");
  for (int r : ratios)
    if (r <= 0) fail(ErrorKind::range, "split_dataset: ratios must be positive");

  std::vector<std::string> ids;
  ids.reserve(instances.size());
  for (const auto& inst : instances) ids.push_back(inst.id);
  std::sort(ids.begin(), ids.end());  // canonical base order, independent of file order
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids);

  const size_t n = ids.size();
  const double total = static_cast<double>(ratios[0] + ratios[1] + ratios[2]);
  std::array<size_t, 3> sizes{};
  std::array<double, 3> frac{};
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double ideal = static_cast<double>(n) * ratios[i] / total;
    sizes[i] = static_cast<size_t>(ideal);
    frac[i] = ideal - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  // distribute the remainder by largest fractional part (ties: earlier split)
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (frac[i] > frac[best] + 1e-12) best = i;
    sizes[best] += 1;
    frac[best] = -1.0;
    ++assigned;
  }

  DatasetSplit split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + sizes[0]);
  split.dev.assign(ids.begin() + sizes[0], ids.begin() + sizes[0] + sizes[1]);
  split.test.assign(ids.begin() + sizes[0] + sizes[1], ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::string body;
  for (const auto& id : ids) {
    body += id;
    body += '\n';
  }
  write_text_file(path, body);
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_id_list(dir / "train.txt", split.train);
  write_id_list(dir / "dev.txt", split.dev);
  write_id_list(dir / "test.txt", split.test);
  write_text_file(dir / "seed.txt", std::to_string(split.seed) + "\n");
}

DatasetSplit load_split(const std::filesystem::path& dir) {
  DatasetSplit split;
  split.train = read_id_list(dir / "train.txt");
  split.dev = read_id_list(dir / "dev.txt");
  split.test = read_id_list(dir / "test.txt");
  if (std::filesystem::exists(dir / "seed.txt"))
    split.seed = std::stoull(read_text_file(dir / "seed.txt"));
  return split;
}

std::vector<size_t> subsample_indices(size_t total, size_t n, uint64_t seed) {
  if (n > total)
    fail(ErrorKind::size, "subsample of " + std::to_string(n) + " from " + std::to_string(total));
  std::vector<size_t> perm(total);
  for (size_t i = 0; i < total; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "subsample"));
  rng.shuffle(perm);
  std::vector<size_t> out(perm.begin(), perm.begin() + n);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ScoredExample> subsample_train(const std::vector<ScoredExample>& train, size_t n,
                                           uint64_t seed) {
  std::vector<ScoredExample> out;
  out.reserve(n);
  for (const size_t i : subsample_indices(train.size(), n, seed)) out.push_back(train[i]);
  return out;
}

}  // namespace perfpred::data
