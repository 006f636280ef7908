#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "scope_refine/harness/corpus.hpp"
#include "scope_refine/harness/metrics.hpp"
#include "scope_refine/model/model.hpp"
#include "scope_refine/search/search.hpp"
#include "scope_refine/validate/validate.hpp"

namespace scope_refine::harness {

struct SplitSpec {
  double train = 0.5;
  double calibrate = 0.2;
  double test = 0.3;
  std::uint64_t seed = 1;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct Split {
  std::vector<std::size_t> train, calibrate, test;  // each ascending
};

// Seeded shuffle, then train and calibrate take round(fraction * n) indices
// and test takes the rest. Throws InvalidConfig unless the fractions are
// non-negative and sum to 1.
Split make_split(std::size_t n, const SplitSpec& spec);

struct CorpusSpec {
  std::string path;  // JSONL corpus; empty means generate
  std::size_t n = 1000;
  std::uint64_t gen_seed = 1;
  SynthOptions synth;

  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

struct ExperimentConfig {
  CorpusSpec corpus;
  SplitSpec split;
  model::ModelSpec model;
  model::TrainConfig train;
  std::uint64_t train_seed = 1;
  std::size_t ensemble_size = 3;  // deep-ensemble members, train seeds train_seed + i
  validate::ValidationConfig validation;
  // Budgeted MVR keeps regressions bounded: only flagged inputs are adapted.
  validate::ThresholdConfig threshold{0.5, validate::CalibrationMode::MvrBudget, 0.04};
  search::SearchConfig search;
  std::optional<search::Strategy> strategy = search::Strategy::AES;  // nullopt: validation only
  std::uint64_t search_seed = 1;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Defaults with every seed set to `seed`.
ExperimentConfig default_experiment(std::uint64_t seed);

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing fields keep their defaults; wrong types throw InvalidConfig.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

struct ItemResult {
  std::string id;
  std::size_t label = 0;
  std::size_t baseline_prediction = 0;
  double score = 0;  // DSMG combined
  bool in_scope = true;
  std::string outcome;  // "not-adapted", "unchanged", "refined", "best-effort" or "failed"
  double final_score = 0;
  std::size_t final_prediction = 0;
  std::size_t evaluations = 0;
  std::string genome;

  friend bool operator==(const ItemResult&, const ItemResult&) = default;
};

// Wall-clock quantities, kept apart so reruns can be compared without them.
struct Timing {
  double tps = 0;  // applied transformations per second of transformation time
  double mean_adapt_seconds = 0;
  double total_seconds = 0;

  friend bool operator==(const Timing&, const Timing&) = default;
};

inline constexpr int kReportVersion = 1;

struct MetricsReport {
  ExperimentConfig config;
  bool partial = false;
  std::vector<std::string> failures;

  double train_accuracy = 0;
  double tau = 0;
  double temperature = 1;

  ClassificationMetrics baseline;
  ClassificationMetrics adapted;
  double auc = 0;                             // DSMG
  std::map<std::string, double> metric_auc;   // baseline uncertainty metrics by name
  ValidationRates rates;                      // DSMG verdicts on the test split

  std::size_t test_size = 0;
  std::size_t baseline_mispredictions = 0;
  std::size_t flagged = 0;
  std::size_t corrected = 0;
  std::size_t regressed = 0;
  double corrected_fraction = 0;
  double regressed_fraction = 0;
  std::size_t applied_transformations = 0;
  std::size_t evaluations = 0;

  Timing timing;
  std::vector<ItemResult> items;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Split, train surrogate and probes, calibrate temperature and tau, score
// the test split, adapt out-of-scope inputs, re-evaluate. Per-input failures
// mark the report partial instead of aborting.
MetricsReport run_pipeline(const ExperimentConfig& cfg);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);  // throws VersionMismatch
void report_write(const MetricsReport& report, const std::string& path);
MetricsReport report_read(const std::string& path);

}  // namespace scope_refine::harness
