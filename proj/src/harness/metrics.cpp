#include "scope_refine/harness/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "scope_refine/harness/corpus.hpp"

namespace scope_refine::harness {

double auc(const std::vector<double>& scores, const std::vector<bool>& correct) {
  if (scores.size() != correct.size()) throw HarnessError(HarnessErrorKind::LengthMismatch, "scores vs correct");
  const std::size_t n = scores.size();
  std::size_t positives = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw HarnessError(HarnessErrorKind::SingleClass, "auc needs both correct and incorrect outcomes");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  // Midranks (1-based) summed over the correct outcomes. Doubled to stay integral.
  std::uint64_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t midrank_x2 = static_cast<std::uint64_t>(i + 1 + j);  // (i+1) + j
    for (std::size_t k = i; k < j; ++k) {
      if (correct[order[k]]) rank_sum_x2 += midrank_x2;
    }
    i = j;
  }
  // U = R - P(P+1)/2, doubled.
  std::uint64_t p = positives;
  std::uint64_t u_x2 = rank_sum_x2 - p * (p + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(p) * static_cast<double>(negatives));
}

ValidationRates cvr_mvr(const std::vector<validate::Verdict>& verdicts, const std::vector<bool>& correct) {
  if (verdicts.size() != correct.size()) throw HarnessError(HarnessErrorKind::LengthMismatch, "verdicts vs correct");
  std::size_t wrong = 0, right = 0, wrong_flagged = 0, right_flagged = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    bool flagged = verdicts[i] == validate::Verdict::OutOfScope;
    if (correct[i]) {
      ++right;
      right_flagged += flagged;
    } else {
      ++wrong;
      wrong_flagged += flagged;
    }
  }
  if (wrong == 0 || right == 0) {
    throw HarnessError(HarnessErrorKind::EmptyDenominator, "cvr/mvr need both correct and incorrect predictions");
  }
  return {static_cast<double>(wrong_flagged) / static_cast<double>(wrong),
          static_cast<double>(right_flagged) / static_cast<double>(right)};
}

ClassificationMetrics classification_metrics(const std::vector<std::size_t>& predicted,
                                             const std::vector<std::size_t>& labels, std::size_t positive) {
  if (predicted.size() != labels.size()) throw HarnessError(HarnessErrorKind::LengthMismatch, "predicted vs labels");
  if (labels.empty()) throw HarnessError(HarnessErrorKind::EmptyDenominator, "no predictions");
  std::size_t hits = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predicted[i] == labels[i];
    bool pp = predicted[i] == positive, lp = labels[i] == positive;
    tp += pp && lp;
    fp += pp && !lp;
    fn += !pp && lp;
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace scope_refine::harness
