#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfpred/jsonl.hpp"

namespace perfpred::data {

struct Instance {
  std::string id;
  std::string task_id;
  std::string input;
  std::vector<std::string> references;
  std::string task_context;
  json extra;  // unknown record fields, preserved opaquely
};

struct Generation {
  std::string instance_id;
  int sample_index = 0;
  std::string output;
};

enum class MetricSource { ingested, llm_judge_template };

struct MetricSpec {
  std::string metric_id;
  double scale_min = 0.0;
  double scale_max = 1.0;
  bool higher_is_better = true;
  std::string description;
  MetricSource source = MetricSource::ingested;
  // for llm_judge_template metrics: which prompt template produces the raw
  // score and its per-metric arguments (criteria text, language pair, the
  // response key for multi-score templates, ...)
  std::string template_id;
  std::map<std::string, std::string> template_args;
};

struct ScoredExample {
  std::string instance_id;
  int sample_index = 0;
  std::string metric_id;
  double score = 0.0;  // normalized to [0,1]
  double raw_score = 0.0;
};

struct DatasetSplit {
  std::vector<std::string> train, dev, test;
  uint64_t seed = 0;
};

struct Dataset {
  std::string dataset_id;
  std::vector<Instance> instances;
  std::vector<Generation> generations;
  std::vector<ScoredExample> scores;
  std::vector<MetricSpec> metrics;

  const Instance* find_instance(const std::string& id) const;
  const MetricSpec* find_metric(const std::string& metric_id) const;
  std::vector<const Generation*> generations_of(const std::string& instance_id) const;
};

/// Normalizes a raw metric value to [0,1] linearly over the declared scale.
/// Raw values outside [scale_min, scale_max] raise a range error.
double normalize_score(double raw, const MetricSpec& spec);

/// Loads a dataset directory: instances.jsonl, generations.jsonl (optional),
/// scores.jsonl (optional), metrics.json (sidecar with dataset_id + metric
/// specs). `schema` selects the layout; only "jsonl" is defined.
Dataset load_dataset(const std::filesystem::path& dir, const std::string& schema = "jsonl");

std::vector<MetricSpec> parse_metric_specs(const json& sidecar);
json metric_spec_to_json(const MetricSpec& spec);

/// Instance-level split with the given ratio triple: deterministic shuffle by
/// seed, sizes apportioned by largest remainder.
DatasetSplit split_dataset(const std::vector<Instance>& instances,
                           std::array<int, 3> ratios, uint64_t seed);

void save_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_split(const std::filesystem::path& dir);

/// First-N-of-permutation subsample over row indices: uniform without
/// replacement, deterministic per seed, and nested (the N-subset is contained
/// in the 2N-subset for the same seed). Returned indices are sorted.
std::vector<size_t> subsample_indices(size_t total, size_t n, uint64_t seed);

std::vector<ScoredExample> subsample_train(const std::vector<ScoredExample>& train, size_t n,
                                           uint64_t seed);

}  // namespace perfpred::data
