#pragma once

#include <cstddef>
#include <vector>

#include "scope_refine/validate/validate.hpp"

namespace scope_refine::harness {

// Probability that a random (correct, incorrect) pair is ordered with the
// correct one scoring higher, ties counting one half; via midranks.
// Throws SingleClass or LengthMismatch.
double auc(const std::vector<double>& scores, const std::vector<bool>& correct);

struct ValidationRates {
  double cvr = 0;  // flagged mispredictions / mispredictions
  double mvr = 0;  // flagged correct predictions / correct predictions

  friend bool operator==(const ValidationRates&, const ValidationRates&) = default;
};

// Throws EmptyDenominator when either class is absent, or LengthMismatch.
ValidationRates cvr_mvr(const std::vector<validate::Verdict>& verdicts, const std::vector<bool>& correct);

struct ClassificationMetrics {
  double accuracy = 0;
  double precision = 0;  // of `positive`; 0 when nothing is predicted positive
  double recall = 0;     // 0 when no label is positive
  double f1 = 0;         // 0 when precision + recall = 0

  friend bool operator==(const ClassificationMetrics&, const ClassificationMetrics&) = default;
};

// Throws LengthMismatch, or EmptyDenominator on empty input.
ClassificationMetrics classification_metrics(const std::vector<std::size_t>& predicted,
                                             const std::vector<std::size_t>& labels, std::size_t positive = 1);

}  // namespace scope_refine::harness
