#include "scope_refine/search/search.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>

#include "scope_refine/minic/printer.hpp"

namespace scope_refine::search {

using minic::SourceUnit;
using transform::TransformGenome;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

DsmgFitness::DsmgFitness(model::Classifier& classifier, validate::ValidationConfig cfg)
    : classifier_(classifier), cfg_(std::move(cfg)) {}

validate::ValidityScore DsmgFitness::score(const SourceUnit& unit) {
  std::string key = minic::print_source(unit);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  ++model_calls_;
  auto score = validate::score_input(classifier_, model::source_tokens(unit), cfg_);
  cache_.emplace(std::move(key), score);
  return score;
}

double DsmgFitness::fitness(const SourceUnit& unit) { return score(unit).combined; }

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::AES: return "aes";
    case Strategy::HillClimb: return "hc";
    case Strategy::Random: return "rand";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  for (Strategy s : {Strategy::AES, Strategy::HillClimb, Strategy::Random}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

void SearchConfig::validate() const {
  if (population < 2) throw SearchError("population must be >= 2");
  if (elitism >= population) throw SearchError("elitism must be < population");
  if (tournament < 1) throw SearchError("tournament size must be >= 1");
  if (!(crossover_rate >= 0 && crossover_rate <= 1) || !(mutation_rate >= 0 && mutation_rate <= 1)) {
    throw SearchError("crossover and mutation rates must lie in [0,1]");
  }
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  if (a.genome.edits.size() != b.genome.edits.size()) return a.genome.edits.size() < b.genome.edits.size();
  return a.discovered < b.discovered;
}

namespace {

// Shared bookkeeping: every fitness call goes through here so the budget and
// best-so-far are tracked in one place.
class Run {
 public:
  Run(const SourceUnit& original, FitnessFunction& fitness, Strategy strategy)
      : original_(original), fitness_(fitness), start_(Clock::now()) {
    result_.strategy = strategy;
  }

  Candidate evaluate(TransformGenome genome) {
    const auto t0 = Clock::now();
    transform::GenomeResult applied = transform::apply_genome(original_, genome);
    result_.transform_seconds += seconds_since(t0);
    result_.applied_transformations += applied.applied_count;
    Candidate c{std::move(genome), std::move(applied.unit), 0, 0};
    c.fitness = fitness_.fitness(c.unit);
    c.discovered = ++result_.evaluations_used;
    if (result_.evaluations_used == 1 || better(c, result_.best)) result_.best = c;
    return c;
  }

  std::size_t evaluations() const { return result_.evaluations_used; }
  double best() const { return result_.best.fitness; }
  void record(double mean) { result_.history.push_back({result_.evaluations_used, result_.best.fitness, mean}); }

  SearchResult finish() {
    result_.wall_seconds = seconds_since(start_);
    return std::move(result_);
  }

 private:
  const SourceUnit& original_;
  FitnessFunction& fitness_;
  Clock::time_point start_;
  SearchResult result_;
};

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

TransformGenome prefix(const TransformGenome& g, std::size_t n) {
  return TransformGenome{{g.edits.begin(), g.edits.begin() + static_cast<std::ptrdiff_t>(n)}};
}

// One edit drawn against the program that the first `n` edits produce.
std::optional<transform::Edit> fresh_edit(const SourceUnit& original, const TransformGenome& g, std::size_t n,
                                          std::mt19937_64& rng) {
  const SourceUnit base = transform::apply_genome(original, prefix(g, n)).unit;
  const TransformGenome drawn = transform::random_genome(base, 1, rng());
  if (drawn.edits.empty()) return std::nullopt;
  return drawn.edits.front();
}

// Append, replace or drop one edit, chosen uniformly. An empty genome can
// only grow and a full one cannot; a draw with nothing applicable is a no-op.
TransformGenome mutate(const SourceUnit& original, TransformGenome g, std::mt19937_64& rng) {
  enum { Append, Replace, Drop };
  int kind = static_cast<int>(uniform(rng, 0, 2));
  if (g.edits.empty()) kind = Append;
  if (kind == Append && g.edits.size() >= transform::kMaxGenomeLen) kind = Replace;
  switch (kind) {
    case Append:
      if (auto e = fresh_edit(original, g, g.edits.size(), rng)) g.edits.push_back(*e);
      break;
    case Replace: {
      const std::size_t i = uniform(rng, 0, g.edits.size() - 1);
      if (auto e = fresh_edit(original, g, i, rng)) g.edits[i] = *e;
      break;
    }
    default:
      g.edits.erase(g.edits.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, g.edits.size() - 1)));
  }
  return g;
}

TransformGenome random_length_genome(const SourceUnit& original, std::mt19937_64& rng) {
  const std::size_t len = uniform(rng, 1, transform::kMaxGenomeLen);
  return transform::random_genome(original, len, rng());
}

const Candidate& tournament(const std::vector<Candidate>& pop, std::size_t size, std::mt19937_64& rng) {
  const Candidate* best = &pop[uniform(rng, 0, pop.size() - 1)];
  for (std::size_t i = 1; i < size; ++i) {
    const Candidate& c = pop[uniform(rng, 0, pop.size() - 1)];
    if (better(c, *best)) best = &c;
  }
  return *best;
}

double mean_fitness(const std::vector<Candidate>& pop) {
  double s = 0;
  for (const auto& c : pop) s += c.fitness;
  return s / static_cast<double>(pop.size());
}

}  // namespace

SearchResult aes_search(const SourceUnit& original, FitnessFunction& fitness, const SearchConfig& cfg,
                        std::uint64_t seed) {
  cfg.validate();
  const std::size_t budget = cfg.effective_budget();
  if (budget < cfg.population) {
    throw BudgetTooSmall("budget " + std::to_string(budget) + " is below the population size " +
                         std::to_string(cfg.population));
  }
  std::mt19937_64 rng(seed);
  Run run(original, fitness, Strategy::AES);
  auto reached = [&] { return cfg.early_stop_tau && run.best() >= *cfg.early_stop_tau; };

  std::vector<Candidate> pop;
  pop.push_back(run.evaluate({}));
  while (pop.size() < cfg.population) pop.push_back(run.evaluate(random_length_genome(original, rng)));
  run.record(mean_fitness(pop));

  for (std::size_t gen = 1; gen <= cfg.generations && !reached() && run.evaluations() < budget; ++gen) {
    std::stable_sort(pop.begin(), pop.end(), better);
    std::vector<Candidate> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(cfg.elitism));
    while (next.size() < cfg.population && run.evaluations() < budget) {
      TransformGenome child = tournament(pop, cfg.tournament, rng).genome;
      if (coin(rng, cfg.crossover_rate)) {
        const TransformGenome& other = tournament(pop, cfg.tournament, rng).genome;
        const std::size_t i = uniform(rng, 0, child.edits.size());
        const std::size_t j = uniform(rng, 0, other.edits.size());
        child.edits.resize(i);
        child.edits.insert(child.edits.end(), other.edits.begin() + static_cast<std::ptrdiff_t>(j),
                           other.edits.end());
        if (child.edits.size() > transform::kMaxGenomeLen) child.edits.resize(transform::kMaxGenomeLen);
      }
      if (coin(rng, cfg.mutation_rate)) child = mutate(original, std::move(child), rng);
      next.push_back(run.evaluate(std::move(child)));
    }
    pop = std::move(next);
    run.record(mean_fitness(pop));
  }
  return run.finish();
}

SearchResult hill_climb(const SourceUnit& original, FitnessFunction& fitness, std::size_t budget,
                        std::size_t max_stall, std::uint64_t seed) {
  if (budget < 1) throw BudgetTooSmall("hill climbing needs a budget of at least 1");
  std::mt19937_64 rng(seed);
  Run run(original, fitness, Strategy::HillClimb);
  Candidate current = run.evaluate({});
  run.record(current.fitness);
  std::size_t stall = 0;
  while (run.evaluations() < budget && stall < max_stall) {
    Candidate neighbour = run.evaluate(mutate(original, current.genome, rng));
    run.record(neighbour.fitness);
    if (neighbour.fitness > current.fitness) {
      current = std::move(neighbour);
      stall = 0;
    } else {
      ++stall;
    }
  }
  return run.finish();
}

SearchResult random_search(const SourceUnit& original, FitnessFunction& fitness, std::size_t budget, double tau,
                           std::uint64_t seed) {
  if (budget < 1) throw BudgetTooSmall("random search needs a budget of at least 1");
  std::mt19937_64 rng(seed);
  Run run(original, fitness, Strategy::Random);
  double last = run.evaluate({}).fitness;
  run.record(last);
  while (last < tau && run.evaluations() < budget) {
    last = run.evaluate(random_length_genome(original, rng)).fitness;
    run.record(last);
  }
  return run.finish();
}

SearchResult run_strategy(Strategy strategy, const SourceUnit& original, FitnessFunction& fitness,
                          const SearchConfig& cfg, std::uint64_t seed) {
  switch (strategy) {
    case Strategy::AES: return aes_search(original, fitness, cfg, seed);
    case Strategy::HillClimb: return hill_climb(original, fitness, cfg.effective_budget(), cfg.max_stall, seed);
    case Strategy::Random:
      return random_search(original, fitness, cfg.effective_budget(),
                           cfg.early_stop_tau.value_or(std::numeric_limits<double>::infinity()), seed);
  }
  throw SearchError("unknown strategy");
}

std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Unchanged: return "unchanged";
    case OutcomeKind::Refined: return "refined";
    case OutcomeKind::BestEffort: return "best-effort";
  }
  return "?";
}

AdaptOutcome adapt(const SourceUnit& original, model::Classifier& classifier,
                   const validate::ValidationConfig& validation, double tau, Strategy strategy,
                   const SearchConfig& cfg, std::uint64_t seed) {
  DsmgFitness fitness(classifier, validation);
  AdaptOutcome out;
  out.before = fitness.score(original);
  out.prediction_before = classifier.infer(model::source_tokens(original)).predicted();
  if (out.before.combined >= tau) {
    out.kind = OutcomeKind::Unchanged;
    out.unit = original;
    out.after = out.before;
    out.prediction = out.prediction_before;
    return out;
  }
  SearchConfig gated = cfg;
  if (!gated.early_stop_tau) gated.early_stop_tau = tau;
  out.search = run_strategy(strategy, original, fitness, gated, seed);
  out.unit = out.search->best.unit;
  out.genome = out.search->best.genome;
  out.after = fitness.score(out.unit);
  out.kind = out.after.combined >= tau ? OutcomeKind::Refined : OutcomeKind::BestEffort;
  out.prediction = classifier.infer(model::source_tokens(out.unit)).predicted();
  return out;
}

}  // namespace scope_refine::search
