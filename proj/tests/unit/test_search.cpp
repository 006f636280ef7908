#include <random>
#include <set>

#include "doctest.h"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/minic/printer.hpp"
#include "scope_refine/minic/scope.hpp"
#include "scope_refine/search/search.hpp"
#include "support/equivalence.hpp"
#include "support/fixtures.hpp"

using namespace scope_refine;
using namespace scope_refine::search;

namespace {

// A rugged but deterministic landscape: a hash of the canonical source.
class HashFitness : public FitnessFunction {
 public:
  double fitness(const minic::SourceUnit& unit) override {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : minic::print_source(unit)) h = (h ^ c) * 1099511628211ull;
    return static_cast<double>(h % 100000) / 100000.0;
  }
};

class ConstantFitness : public FitnessFunction {
 public:
  explicit ConstantFitness(double v) : value(v) {}
  double fitness(const minic::SourceUnit&) override { return value; }
  double value;
};

// Records every evaluated program.
class Recording : public FitnessFunction {
 public:
  explicit Recording(FitnessFunction& inner) : inner_(inner) {}
  double fitness(const minic::SourceUnit& unit) override {
    seen.push_back(unit);
    return inner_.fitness(unit);
  }
  std::vector<minic::SourceUnit> seen;

 private:
  FitnessFunction& inner_;
};

minic::SourceUnit fixture(const std::string& name) {
  return minic::parse(testing::read_file(std::string(SR_FIXTURE_DIR "/programs/") + name));
}

void check_history(const SearchResult& r, std::size_t budget) {
  REQUIRE_FALSE(r.history.empty());
  CHECK(r.evaluations_used <= budget);
  CHECK(r.history.back().evaluations == r.evaluations_used);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i].best >= r.history[i - 1].best);
    CHECK(r.history[i].evaluations > r.history[i - 1].evaluations);
  }
  CHECK(r.history.back().best == r.best.fitness);
}

bool same(const SearchResult& a, const SearchResult& b) {
  if (a.evaluations_used != b.evaluations_used || !(a.best.genome == b.best.genome) ||
      a.best.fitness != b.best.fitness || a.history.size() != b.history.size() ||
      a.applied_transformations != b.applied_transformations) {
    return false;
  }
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    if (a.history[i].best != b.history[i].best || a.history[i].mean != b.history[i].mean) return false;
  }
  return true;
}

model::ModelHandle probed_model() {
  model::ModelSpec spec;
  spec.num_layers = 3;
  spec.hidden_dim = 16;
  spec.vocab_hash_dim = 256;
  std::vector<model::TrainingExample> corpus;
  for (const auto& [name, source] : testing::fixture_programs()) {
    corpus.push_back({model::tokenize(minic::parse(source), spec.vocab_hash_dim), corpus.size() % 2});
  }
  model::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.probe_epochs = 5;
  return model::fit_layer_probes(model::train_surrogate(corpus, spec, cfg, 3), corpus, cfg);
}

}  // namespace

TEST_CASE("strategy names and config validation") {
  CHECK(strategy_from_name("aes") == Strategy::AES);
  CHECK(strategy_from_name("hc") == Strategy::HillClimb);
  CHECK(strategy_from_name("rand") == Strategy::Random);
  CHECK_FALSE(strategy_from_name("beam"));
  SearchConfig cfg;
  CHECK(cfg.effective_budget() == 220);
  CHECK_NOTHROW(cfg.validate());
  cfg.elitism = cfg.population;
  CHECK_THROWS_AS(cfg.validate(), SearchError);
  cfg = {};
  cfg.population = 1;
  CHECK_THROWS_AS(cfg.validate(), SearchError);
  cfg = {};
  cfg.budget = 19;
  HashFitness f;
  CHECK_THROWS_AS(aes_search(fixture("loops.mc"), f, cfg, 1), BudgetTooSmall);
}

TEST_CASE("candidate ordering") {
  Candidate a, b;
  a.fitness = 0.5;
  b.fitness = 0.4;
  CHECK(better(a, b));
  b.fitness = 0.5;
  a.genome.edits.resize(2);
  b.genome.edits.resize(1);
  CHECK(better(b, a));
  a.genome.edits.resize(1);
  a.discovered = 3;
  b.discovered = 4;
  CHECK(better(a, b));
  CHECK_FALSE(better(a, a));
}

TEST_CASE("aes: budget law, monotone history, determinism") {
  HashFitness f;
  for (const char* name : {"loops.mc", "branches.mc", "switchy.mc", "capture.mc"}) {
    CAPTURE(name);
    const auto unit = fixture(name);
    const double original = f.fitness(unit);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SearchConfig cfg;
      const auto r = aes_search(unit, f, cfg, seed);
      check_history(r, cfg.effective_budget());
      // Elites keep their fitness, so each later generation costs N - e.
      CHECK(r.evaluations_used == cfg.population + cfg.generations * (cfg.population - cfg.elitism));
      CHECK(r.history.size() == cfg.generations + 1);
      CHECK(r.best.fitness >= original);
      CHECK(minic::print_source(r.best.unit) == minic::print_source(transform::apply_genome(unit, r.best.genome).unit));
      CHECK(r.strategy == Strategy::AES);
      CHECK(same(r, aes_search(unit, f, cfg, seed)));
    }
    SearchConfig tight;
    tight.budget = 45;
    check_history(aes_search(unit, f, tight, 9), 45);
    CHECK(aes_search(unit, f, tight, 9).evaluations_used == 45);
  }
}

TEST_CASE("aes early stop on an already good original") {
  ConstantFitness f(0.8);
  SearchConfig cfg;
  cfg.early_stop_tau = 0.7;
  const auto r = aes_search(fixture("loops.mc"), f, cfg, 4);
  CHECK(r.evaluations_used == cfg.population);
  CHECK(r.history.size() == 1);
  CHECK(r.best.genome.edits.empty());  // ties go to the shorter genome
}

TEST_CASE("hill climbing") {
  SUBCASE("local optimum stops after max_stall non-improvements") {
    ConstantFitness f(0.3);
    const auto r = hill_climb(fixture("loops.mc"), f, 220, 25, 1);
    CHECK(r.evaluations_used == 26);
    CHECK(r.best.genome.edits.empty());
    check_history(r, 220);
  }
  SUBCASE("accepted moves strictly improve and the budget holds") {
    HashFitness f;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = hill_climb(fixture("switchy.mc"), f, 60, 25, seed);
      check_history(r, 60);
      std::vector<double> accepted = {r.history.front().mean};
      for (const auto& h : r.history) {
        if (h.mean > accepted.back()) accepted.push_back(h.mean);
      }
      for (std::size_t i = 1; i < accepted.size(); ++i) CHECK(accepted[i] > accepted[i - 1]);
      CHECK(r.best.fitness == accepted.back());
      CHECK(same(r, hill_climb(fixture("switchy.mc"), f, 60, 25, seed)));
    }
  }
}

TEST_CASE("random search") {
  HashFitness f;
  const auto unit = fixture("branches.mc");
  CHECK(random_search(unit, f, 50, 0.0, 3).evaluations_used == 1);
  const auto full = random_search(unit, f, 50, 1.01, 3);
  CHECK(full.evaluations_used == 50);
  check_history(full, 50);
  CHECK(same(full, random_search(unit, f, 50, 1.01, 3)));
  CHECK_FALSE(same(full, random_search(unit, f, 50, 1.01, 4)));
  const auto early = random_search(unit, f, 200, 0.9, 3);
  CHECK((early.best.fitness >= 0.9 || early.evaluations_used == 200));
  if (early.best.fitness >= 0.9) CHECK(early.history.back().mean >= 0.9);
}

TEST_CASE("every evaluated candidate is semantically equivalent to the original") {
  HashFitness inner;
  std::mt19937_64 rng(77);
  for (const auto& [name, source] : testing::fixture_programs()) {
    CAPTURE(name);
    const auto unit = minic::parse(source);
    for (Strategy s : {Strategy::AES, Strategy::HillClimb, Strategy::Random}) {
      Recording rec(inner);
      SearchConfig cfg;
      cfg.population = 6;
      cfg.generations = 3;
      run_strategy(s, unit, rec, cfg, 5);
      CHECK(rec.seen.size() <= cfg.effective_budget());
      for (const auto& candidate : rec.seen) {
        CHECK_NOTHROW(minic::resolve_scopes(candidate));
        for (const auto& fn : unit.functions) {
          for (int trial = 0; trial < 20; ++trial) {
            const auto args = testing::random_args(fn, rng);
            const auto diff = testing::behaviour_mismatch(unit, candidate, fn.name, args);
            CHECK_MESSAGE(!diff, *diff);
          }
        }
      }
    }
  }
}

TEST_CASE("degenerate search space") {
  const auto unit = minic::parse("int f() { return 7; }");
  CHECK(transform::applicable_operators(unit).empty());
  HashFitness f;
  const auto r = aes_search(unit, f, {}, 1);
  CHECK(r.best.genome.edits.empty());
  CHECK(minic::print_source(r.best.unit) == minic::print_source(unit));
  CHECK(r.applied_transformations == 0);
}

TEST_CASE("adapt gates on the validity score") {
  model::SurrogateClassifier classifier(probed_model());
  validate::ValidationConfig vcfg;
  vcfg.k = 10;
  const auto unit = fixture("loops.mc");
  SearchConfig cfg;
  cfg.population = 8;
  cfg.generations = 4;

  SUBCASE("in-scope inputs are left alone") {
    const auto out = adapt(unit, classifier, vcfg, 0.0, Strategy::AES, cfg, 1);
    CHECK(out.kind == OutcomeKind::Unchanged);
    CHECK(out.evaluations() == 0);
    CHECK(minic::print_source(out.unit) == minic::print_source(unit));
    CHECK(out.prediction == out.prediction_before);
  }
  SUBCASE("unreachable tau gives best effort") {
    const auto out = adapt(unit, classifier, vcfg, 1.01, Strategy::AES, cfg, 1);
    CHECK(out.kind == OutcomeKind::BestEffort);
    CHECK(out.evaluations() == cfg.population + cfg.generations * (cfg.population - cfg.elitism));
    CHECK(out.after.combined >= out.before.combined);
    CHECK(out.prediction == classifier.infer(model::source_tokens(out.unit)).predicted());
  }
  SUBCASE("a reachable tau is refined") {
    DsmgFitness fitness(classifier, vcfg);
    const auto probe = aes_search(unit, fitness, cfg, 1);
    const double start = fitness.fitness(unit);
    REQUIRE(probe.best.fitness > start);
    const double tau = (start + probe.best.fitness) / 2;
    const auto out = adapt(unit, classifier, vcfg, tau, Strategy::AES, cfg, 1);
    CHECK(out.kind == OutcomeKind::Refined);
    CHECK(out.after.combined >= tau);
    CHECK(out.evaluations() <= cfg.effective_budget());
  }
  SUBCASE("minimal program") {
    const auto minimal = minic::parse("int f() { return 7; }");
    const auto out = adapt(minimal, classifier, vcfg, 1.01, Strategy::HillClimb, cfg, 1);
    CHECK(out.kind == OutcomeKind::BestEffort);
    CHECK(minic::print_source(out.unit) == minic::print_source(minimal));
  }
}

TEST_CASE("dsmg fitness memoises by canonical source") {
  model::SurrogateClassifier classifier(probed_model());
  DsmgFitness fitness(classifier, {});
  const auto unit = fixture("loops.mc");
  const double a = fitness.fitness(unit);
  CHECK(fitness.fitness(minic::parse(minic::print_source(unit))) == a);
  CHECK(fitness.model_calls() == 1);
}
