#include "scope_refine/validate/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scope_refine::validate {

using model::ModelOutput;
using model::SubmodelSample;

std::string_view to_string(ValidateErrorKind kind) {
  switch (kind) {
    case ValidateErrorKind::TooFewSamples: return "TooFewSamples";
    case ValidateErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ValidateErrorKind::InvalidWeights: return "InvalidWeights";
    case ValidateErrorKind::WrongEvidenceKind: return "WrongEvidenceKind";
    case ValidateErrorKind::DegenerateCalibrationSet: return "DegenerateCalibrationSet";
  }
  return "?";
}

ValidateError::ValidateError(ValidateErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += out[i] = std::exp(logits[i] - m);
  for (double& p : out) p /= z;
  return out;
}

std::vector<double> mean_probs(const std::vector<const std::vector<double>*>& dists) {
  std::vector<double> mean(dists.front()->size(), 0.0);
  for (const auto* d : dists) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += (*d)[c];
  }
  for (double& m : mean) m /= static_cast<double>(dists.size());
  return mean;
}

// Population variance, shifted by the first element so that identical
// values give exactly zero.
double variance(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double s = 0, s2 = 0;
  for (double x : xs) {
    s += x - xs.front();
    s2 += (x - xs.front()) * (x - xs.front());
  }
  return std::max(0.0, s2 / n - (s / n) * (s / n));
}

void check_weights(const DsmgWeights& w) {
  if (!(w.w_var >= 0) || !(w.w_dist >= 0) || std::abs(w.w_var + w.w_dist - 1.0) > 1e-9) {
    throw ValidateError(ValidateErrorKind::InvalidWeights, "w_var and w_dist must be non-negative and sum to 1");
  }
}

}  // namespace

std::vector<double> default_layer_weights(std::size_t num_layers) {
  const double total = static_cast<double>(num_layers * (num_layers + 1) / 2);
  std::vector<double> w(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) w[l] = static_cast<double>(l + 1) / total;
  return w;
}

ValidityScore dsmg_score(const std::vector<SubmodelSample>& samples, const DsmgWeights& weights,
                         const std::vector<double>& layer_weights) {
  if (samples.size() < 2) {
    throw ValidateError(ValidateErrorKind::TooFewSamples, "need at least 2 samples, got " +
                                                              std::to_string(samples.size()));
  }
  check_weights(weights);
  const std::size_t classes = samples.front().output.probs.size();
  const std::size_t layers = samples.front().output.probe_logits.size();
  if (classes == 0 || layers == 0) throw ValidateError(ValidateErrorKind::ShapeMismatch, "empty probs or probes");
  for (const auto& s : samples) {
    if (s.output.probs.size() != classes || s.output.probe_logits.size() != layers) {
      throw ValidateError(ValidateErrorKind::ShapeMismatch, "samples disagree on class or layer count");
    }
    for (const auto& p : s.output.probe_logits) {
      if (p.size() != classes) throw ValidateError(ValidateErrorKind::ShapeMismatch, "probe width differs from C");
    }
  }
  const std::vector<double> lw = layer_weights.empty() ? default_layer_weights(layers) : layer_weights;
  if (lw.size() != layers) throw ValidateError(ValidateErrorKind::ShapeMismatch, "layer_weights length differs from L");
  if (std::any_of(lw.begin(), lw.end(), [](double w) { return !(w >= 0); }) ||
      std::abs(std::accumulate(lw.begin(), lw.end(), 0.0) - 1.0) > 1e-9) {
    throw ValidateError(ValidateErrorKind::InvalidWeights, "layer weights must be non-negative and sum to 1");
  }

  const double k = static_cast<double>(samples.size());
  std::vector<const std::vector<double>*> probs;
  for (const auto& s : samples) probs.push_back(&s.output.probs);

  ValidityScore out;
  out.weights = weights;

  double var_sum = 0;
  std::vector<double> column(samples.size());
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = (*probs[i])[c];
    var_sum += variance(column);
  }
  out.variance_term = var_sum / static_cast<double>(classes) / 0.25;

  out.consensus_class = argmax(mean_probs(probs));
  double dist_sum = 0;
  for (const auto& s : samples) {
    double d = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      d += lw[l] * (1.0 - softmax(s.output.probe_logits[l])[out.consensus_class]);
    }
    dist_sum += d;
  }
  out.distance_term = dist_sum / k;
  out.combined = weights.w_var * (1.0 - out.variance_term) + weights.w_dist * (1.0 - out.distance_term);
  return out;
}

// ---- baseline uncertainty metrics

std::string_view to_string(UncertaintyMetricId id) {
  switch (id) {
    case UncertaintyMetricId::Vanilla: return "vanilla";
    case UncertaintyMetricId::TemperatureScaled: return "temperature-scaled";
    case UncertaintyMetricId::Entropy: return "entropy";
    case UncertaintyMetricId::PredictiveEntropy: return "predictive-entropy";
    case UncertaintyMetricId::MutualInformation: return "mutual-information";
    case UncertaintyMetricId::LeastConfidence: return "least-confidence";
    case UncertaintyMetricId::RatioConfidence: return "ratio-confidence";
    case UncertaintyMetricId::MarginConfidence: return "margin-confidence";
    case UncertaintyMetricId::MCDropoutVariance: return "mc-dropout";
    case UncertaintyMetricId::DeepEnsemble: return "deep-ensemble";
  }
  return "?";
}

std::optional<UncertaintyMetricId> metric_from_name(std::string_view name) {
  for (auto id : kAllUncertaintyMetrics) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

EvidenceKind evidence_kind(UncertaintyMetricId id) {
  switch (id) {
    case UncertaintyMetricId::PredictiveEntropy:
    case UncertaintyMetricId::MutualInformation:
    case UncertaintyMetricId::MCDropoutVariance: return EvidenceKind::Samples;
    case UncertaintyMetricId::DeepEnsemble: return EvidenceKind::Ensemble;
    default: return EvidenceKind::Single;
  }
}

double entropy(const std::vector<double>& probs) {
  double h = 0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

namespace {

std::vector<const std::vector<double>*> distributions(const std::vector<ModelOutput>& outputs, const char* what) {
  if (outputs.size() < 2) {
    throw ValidateError(ValidateErrorKind::WrongEvidenceKind, std::string("need at least 2 ") + what);
  }
  std::vector<const std::vector<double>*> out;
  for (const auto& o : outputs) {
    if (o.probs.empty() || o.probs.size() != outputs.front().probs.size()) {
      throw ValidateError(ValidateErrorKind::ShapeMismatch, std::string(what) + " disagree on class count");
    }
    out.push_back(&o.probs);
  }
  return out;
}

// Largest and second-largest entries; the second is 0 for a single class.
std::pair<double, double> top_two(const std::vector<double>& p) {
  double first = -std::numeric_limits<double>::infinity(), second = 0;
  bool have_second = false;
  for (double x : p) {
    if (x > first) {
      if (first != -std::numeric_limits<double>::infinity()) {
        second = first;
        have_second = true;
      }
      first = x;
    } else if (!have_second || x > second) {
      second = x;
      have_second = true;
    }
  }
  return {first, have_second ? second : 0.0};
}

}  // namespace

MetricValue uncertainty(UncertaintyMetricId metric, const Evidence& evidence) {
  const EvidenceKind kind = evidence_kind(metric);
  if (kind == EvidenceKind::Single) {
    if (!evidence.output || evidence.output->probs.empty()) {
      throw ValidateError(ValidateErrorKind::WrongEvidenceKind,
                          std::string(to_string(metric)) + " needs a single model output");
    }
    const auto& p = evidence.output->probs;
    const double hmax = std::log(static_cast<double>(p.size()));
    const auto [p1, p2] = top_two(p);
    switch (metric) {
      case UncertaintyMetricId::Vanilla: return {p1, p1};
      case UncertaintyMetricId::TemperatureScaled: {
        const auto scaled = model::softmax_with_temperature(evidence.output->logits, evidence.temperature);
        const double t = *std::max_element(scaled.begin(), scaled.end());
        return {t, t};
      }
      case UncertaintyMetricId::Entropy: {
        const double h = entropy(p);
        return {h, hmax - h};
      }
      case UncertaintyMetricId::LeastConfidence: return {1.0 - p1, p1};
      case UncertaintyMetricId::RatioConfidence: return {p2 / p1, 1.0 - p2 / p1};
      case UncertaintyMetricId::MarginConfidence: return {p1 - p2, p1 - p2};
      default: break;
    }
  }
  const auto dists = kind == EvidenceKind::Samples ? distributions(evidence.samples, "samples")
                                                   : distributions(evidence.ensemble, "ensemble members");
  const std::vector<double> mean = mean_probs(dists);
  const double hmax = std::log(static_cast<double>(mean.size()));
  switch (metric) {
    case UncertaintyMetricId::PredictiveEntropy:
    case UncertaintyMetricId::DeepEnsemble: {
      const double h = entropy(mean);
      return {h, hmax - h};
    }
    case UncertaintyMetricId::MutualInformation: {
      double expected = 0;
      for (const auto* d : dists) expected += entropy(*d);
      const double mi = entropy(mean) - expected / static_cast<double>(dists.size());
      return {mi, hmax - mi};
    }
    case UncertaintyMetricId::MCDropoutVariance: {
      const std::size_t y = argmax(mean);
      std::vector<double> column;
      for (const auto* d : dists) column.push_back((*d)[y]);
      const double v = variance(column);
      return {v, 0.25 - v};
    }
    default: break;
  }
  throw ValidateError(ValidateErrorKind::WrongEvidenceKind, "unhandled metric");
}

// ---- temperature

double negative_log_likelihood(const std::vector<LabelledLogits>& calibration, double temperature) {
  double nll = 0;
  for (const auto& item : calibration) {
    const auto probs = model::softmax_with_temperature(item.logits, temperature);
    nll -= std::log(std::max(probs.at(item.label), std::numeric_limits<double>::min()));
  }
  return nll / static_cast<double>(calibration.size());
}

double calibrate_temperature(const std::vector<LabelledLogits>& calibration) {
  if (calibration.empty()) throw ValidateError(ValidateErrorKind::DegenerateCalibrationSet, "empty calibration set");
  double best_t = kTemperatureGrid.front();
  double best = negative_log_likelihood(calibration, best_t);
  for (double t : kTemperatureGrid) {
    const double nll = negative_log_likelihood(calibration, t);
    if (nll < best) {
      best = nll;
      best_t = t;
    }
  }
  return best_t;
}

// ---- threshold

double calibrate_threshold(const std::vector<ScoredOutcome>& scores, const ThresholdConfig& cfg) {
  if (cfg.mode == CalibrationMode::Fixed) return cfg.tau;
  if (scores.empty()) throw ValidateError(ValidateErrorKind::DegenerateCalibrationSet, "empty calibration set");
  std::vector<ScoredOutcome> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  const double nothing_flagged = std::min(0.0, sorted.front().score);
  const auto n_correct = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [](const auto& s) { return s.correct; }));
  const std::size_t n_incorrect = sorted.size() - n_correct;
  if (n_correct == 0) {
    throw ValidateError(ValidateErrorKind::DegenerateCalibrationSet, "calibration set has no correct outcome");
  }
  if (n_incorrect == 0) return nothing_flagged;

  // Sweep cuts between distinct scores in ascending tau order; flagged
  // counts only grow, so MVR is non-decreasing along the sweep.
  double best_tau = nothing_flagged;
  double best_j = 0;  // CVR - MVR with nothing flagged
  std::size_t flagged_correct = 0, flagged_incorrect = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double s = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == s; ++i) (sorted[i].correct ? flagged_correct : flagged_incorrect)++;
    const double tau = i < sorted.size() ? sorted[i].score : std::nextafter(s, std::numeric_limits<double>::infinity());
    const double cvr = static_cast<double>(flagged_incorrect) / static_cast<double>(n_incorrect);
    const double mvr = static_cast<double>(flagged_correct) / static_cast<double>(n_correct);
    if (cfg.mode == CalibrationMode::MvrBudget) {
      if (mvr > cfg.mvr_budget) break;
      best_tau = tau;
    } else if (cvr - mvr > best_j) {
      best_j = cvr - mvr;
      best_tau = tau;
    }
  }
  return best_tau;
}

// ---- verdicts

std::string_view to_string(Verdict v) { return v == Verdict::InScope ? "in-scope" : "out-of-scope"; }

std::string MetricTag::name() const { return dsmg ? "dsmg" : std::string(to_string(metric)); }

ValidationVerdict classify_input(double score, double tau, MetricTag metric) {
  return {score >= tau ? Verdict::InScope : Verdict::OutOfScope, score, metric};
}

ValidityScore score_input(model::Classifier& classifier, const std::vector<std::string>& tokens,
                          const ValidationConfig& cfg) {
  if (cfg.k < 2) throw ValidateError(ValidateErrorKind::TooFewSamples, "k must be >= 2");
  return dsmg_score(classifier.infer_submodels(tokens, cfg.k, cfg.base_seed), cfg.weights, cfg.layer_weights);
}

}  // namespace scope_refine::validate
