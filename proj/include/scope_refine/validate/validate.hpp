#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scope_refine/model/classifier.hpp"
#include "scope_refine/model/model.hpp"

namespace scope_refine::validate {

enum class ValidateErrorKind {
  TooFewSamples,
  ShapeMismatch,
  InvalidWeights,
  WrongEvidenceKind,
  DegenerateCalibrationSet,
};

std::string_view to_string(ValidateErrorKind kind);

class ValidateError : public std::runtime_error {
 public:
  ValidateError(ValidateErrorKind kind, const std::string& detail);
  ValidateErrorKind kind() const { return kind_; }

 private:
  ValidateErrorKind kind_;
};

// w_var + w_dist = 1, both non-negative.
struct DsmgWeights {
  double w_var = 0.5;
  double w_dist = 0.5;

  friend bool operator==(const DsmgWeights&, const DsmgWeights&) = default;
};

// l / (1 + 2 + ... + L) for l = 1..L.
std::vector<double> default_layer_weights(std::size_t num_layers);

struct ValidityScore {
  double variance_term = 0;  // mean per-class variance over samples, divided by 0.25
  double distance_term = 0;  // mean weighted probe disagreement with the consensus class
  double combined = 0;       // w_var (1 - variance_term) + w_dist (1 - distance_term)
  DsmgWeights weights;
  std::size_t consensus_class = 0;
};

// Throws TooFewSamples (K < 2), ShapeMismatch (samples disagree on C or L,
// a sample lacks probe logits, or layer_weights has the wrong length) and
// InvalidWeights. Empty layer_weights selects default_layer_weights(L).
ValidityScore dsmg_score(const std::vector<model::SubmodelSample>& samples, const DsmgWeights& weights = {},
                         const std::vector<double>& layer_weights = {});

enum class UncertaintyMetricId {
  Vanilla,
  TemperatureScaled,
  Entropy,
  PredictiveEntropy,
  MutualInformation,
  LeastConfidence,
  RatioConfidence,
  MarginConfidence,
  MCDropoutVariance,
  DeepEnsemble,
};

inline constexpr std::array<UncertaintyMetricId, 10> kAllUncertaintyMetrics = {
    UncertaintyMetricId::Vanilla,           UncertaintyMetricId::TemperatureScaled,
    UncertaintyMetricId::Entropy,           UncertaintyMetricId::PredictiveEntropy,
    UncertaintyMetricId::MutualInformation, UncertaintyMetricId::LeastConfidence,
    UncertaintyMetricId::RatioConfidence,   UncertaintyMetricId::MarginConfidence,
    UncertaintyMetricId::MCDropoutVariance, UncertaintyMetricId::DeepEnsemble,
};

// Lower-case kebab names, e.g. "mutual-information".
std::string_view to_string(UncertaintyMetricId id);
std::optional<UncertaintyMetricId> metric_from_name(std::string_view name);

enum class EvidenceKind { Single, Samples, Ensemble };
EvidenceKind evidence_kind(UncertaintyMetricId id);

// Whatever a metric needs; unused parts may stay empty.
struct Evidence {
  std::optional<model::ModelOutput> output;
  std::vector<model::ModelOutput> samples;   // dropout sub-models
  std::vector<model::ModelOutput> ensemble;  // independently trained members
  double temperature = 1.0;
};

struct MetricValue {
  double raw = 0;    // the textbook quantity, e.g. entropy in nats
  double score = 0;  // oriented so that higher means more confident
};

// Throws WrongEvidenceKind when the evidence the metric needs is missing or
// holds fewer than two distributions for sample-based metrics.
MetricValue uncertainty(UncertaintyMetricId metric, const Evidence& evidence);
inline double uncertainty_score(UncertaintyMetricId metric, const Evidence& evidence) {
  return uncertainty(metric, evidence).score;
}

// Natural-log entropy; zero-probability terms contribute nothing.
double entropy(const std::vector<double>& probs);

// Temperatures searched by calibrate_temperature, in tie-break order.
inline constexpr std::array<double, 7> kTemperatureGrid = {0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0};

struct LabelledLogits {
  std::vector<double> logits;
  std::size_t label = 0;
};

// Grid temperature minimising mean negative log-likelihood; ties keep the
// earlier grid entry. Throws DegenerateCalibrationSet on an empty set.
double calibrate_temperature(const std::vector<LabelledLogits>& calibration);
double negative_log_likelihood(const std::vector<LabelledLogits>& calibration, double temperature);

enum class CalibrationMode { Fixed, MvrBudget, Youden };

struct ThresholdConfig {
  double tau = 0.5;  // used as-is in Fixed mode
  CalibrationMode mode = CalibrationMode::Youden;
  double mvr_budget = 0.05;

  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

struct ScoredOutcome {
  double score = 0;
  bool correct = false;
};

// Inputs with score < tau are flagged out-of-scope. Each distinct flagged set
// is represented by one tau: min(0, lowest score) when nothing is flagged, the
// lowest unflagged score otherwise, and nextafter(highest score) when all are
// flagged. MvrBudget picks the largest such tau with MVR <= b; Youden the
// smallest maximising CVR - MVR. A set with no incorrect outcome yields the
// nothing-flagged tau. Throws DegenerateCalibrationSet when the set is empty
// or (outside Fixed mode) holds no correct outcome.
double calibrate_threshold(const std::vector<ScoredOutcome>& scores, const ThresholdConfig& cfg);

enum class Verdict { InScope, OutOfScope };
std::string_view to_string(Verdict v);

struct MetricTag {
  bool dsmg = true;
  UncertaintyMetricId metric = UncertaintyMetricId::Vanilla;  // meaningful when !dsmg

  std::string name() const;
};

struct ValidationVerdict {
  Verdict verdict = Verdict::InScope;
  double score = 0;
  MetricTag metric;
};

// InScope iff score >= tau.
ValidationVerdict classify_input(double score, double tau, MetricTag metric = {});

struct ValidationConfig {
  std::size_t k = 30;
  std::uint64_t base_seed = 0;
  DsmgWeights weights;
  std::vector<double> layer_weights;  // empty: default_layer_weights(L)

  friend bool operator==(const ValidationConfig&, const ValidationConfig&) = default;
};

// Draws K sub-models from the classifier and scores them.
ValidityScore score_input(model::Classifier& classifier, const std::vector<std::string>& tokens,
                          const ValidationConfig& cfg);

}  // namespace scope_refine::validate
