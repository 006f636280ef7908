#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scope_refine/minic/ast.hpp"
#include "scope_refine/model/classifier.hpp"
#include "scope_refine/transform/transform.hpp"
#include "scope_refine/validate/validate.hpp"

namespace scope_refine::search {

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when the evaluation budget cannot cover the first generation.
class BudgetTooSmall : public SearchError {
 public:
  using SearchError::SearchError;
};

// Maps a candidate program to a fitness; must be a pure function of the
// program so that searches are deterministic.
class FitnessFunction {
 public:
  virtual ~FitnessFunction() = default;
  virtual double fitness(const minic::SourceUnit& unit) = 0;
};

// DSMG combined score of the candidate with a fixed (K, base_seed). Scores are
// memoised by canonical source.
class DsmgFitness : public FitnessFunction {
 public:
  DsmgFitness(model::Classifier& classifier, validate::ValidationConfig cfg);

  double fitness(const minic::SourceUnit& unit) override;
  validate::ValidityScore score(const minic::SourceUnit& unit);

  std::size_t model_calls() const { return model_calls_; }

 private:
  model::Classifier& classifier_;
  validate::ValidationConfig cfg_;
  std::map<std::string, validate::ValidityScore> cache_;
  std::size_t model_calls_ = 0;
};

enum class Strategy { AES, HillClimb, Random };
std::string_view to_string(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);  // "aes" | "hc" | "rand"

struct SearchConfig {
  std::size_t population = 20;
  std::size_t generations = 10;
  std::size_t tournament = 3;
  double crossover_rate = 0.7;
  double mutation_rate = 0.3;
  std::size_t elitism = 1;
  std::optional<std::size_t> budget;  // default population * (generations + 1)
  std::optional<double> early_stop_tau;
  std::size_t max_stall = 25;  // hill climbing only

  std::size_t effective_budget() const { return budget.value_or(population * (generations + 1)); }
  // Throws SearchError: N >= 2, e < N, t >= 1, rates in [0,1].
  void validate() const;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct Candidate {
  transform::TransformGenome genome;
  minic::SourceUnit unit;
  double fitness = 0;
  std::size_t discovered = 0;  // 1-based evaluation index
};

// One entry per generation (AES) or per evaluation (HC, Random).
struct HistoryEntry {
  std::size_t evaluations = 0;  // cumulative
  double best = 0;              // best fitness seen so far
  double mean = 0;              // population mean (AES) or the evaluated fitness
};

struct SearchResult {
  Candidate best;
  std::vector<HistoryEntry> history;
  std::size_t evaluations_used = 0;
  std::size_t applied_transformations = 0;  // applied edits over all evaluated candidates
  Strategy strategy = Strategy::AES;
  double wall_seconds = 0;
  double transform_seconds = 0;  // time spent applying genomes
};

// Higher fitness, then shorter genome, then earlier discovery.
bool better(const Candidate& a, const Candidate& b);

// Generation 0 is the original plus N-1 random genomes; later generations
// keep e elites and breed the rest by tournament, one-point crossover and
// append/replace/drop mutation. Stops after G generations, when the budget
// cannot fund another child, or once a generation reaches early_stop_tau.
// Throws BudgetTooSmall when the budget is below N.
SearchResult aes_search(const minic::SourceUnit& original, FitnessFunction& fitness, const SearchConfig& cfg,
                        std::uint64_t seed);

// First-improvement hill climbing over single-edit mutations, starting from
// the original (which costs one evaluation). Stops after `budget`
// evaluations or max_stall consecutive non-improvements.
SearchResult hill_climb(const minic::SourceUnit& original, FitnessFunction& fitness, std::size_t budget,
                        std::size_t max_stall, std::uint64_t seed);

// Evaluates the original, then independent random genomes, until one reaches
// tau or the budget is spent.
SearchResult random_search(const minic::SourceUnit& original, FitnessFunction& fitness, std::size_t budget,
                           double tau, std::uint64_t seed);

// Dispatch with each strategy's budget taken from cfg.effective_budget().
// Random search stops at cfg.early_stop_tau (never, when unset).
SearchResult run_strategy(Strategy strategy, const minic::SourceUnit& original, FitnessFunction& fitness,
                          const SearchConfig& cfg, std::uint64_t seed);

enum class OutcomeKind { Unchanged, Refined, BestEffort };
std::string_view to_string(OutcomeKind k);

struct AdaptOutcome {
  OutcomeKind kind = OutcomeKind::Unchanged;
  minic::SourceUnit unit;
  transform::TransformGenome genome;
  validate::ValidityScore before;
  validate::ValidityScore after;
  std::size_t prediction_before = 0;
  std::size_t prediction = 0;  // on `unit`
  std::optional<SearchResult> search;

  std::size_t evaluations() const { return search ? search->evaluations_used : 0; }
};

// Gate on the original's DSMG score; out-of-scope inputs are searched with
// early stopping at tau unless cfg sets its own early_stop_tau.
AdaptOutcome adapt(const minic::SourceUnit& original, model::Classifier& classifier,
                   const validate::ValidationConfig& validation, double tau, Strategy strategy,
                   const SearchConfig& cfg, std::uint64_t seed);

}  // namespace scope_refine::search
