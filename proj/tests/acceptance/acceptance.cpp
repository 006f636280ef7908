// Acceptance suite: one line per criterion, exit status 0 only if all pass.
// Usage: acceptance [FILTER]   (runs criteria whose name contains FILTER)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "scope_refine/cli/cli.hpp"
#include "scope_refine/harness/corpus.hpp"
#include "scope_refine/harness/experiment.hpp"
#include "scope_refine/harness/metrics.hpp"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/minic/printer.hpp"
#include "scope_refine/model/classifier.hpp"
#include "scope_refine/model/net.hpp"
#include "scope_refine/model/protocol.hpp"
#include "scope_refine/search/search.hpp"
#include "scope_refine/transform/transform.hpp"
#include "scope_refine/validate/validate.hpp"
#include "support/equivalence.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace scope_refine;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- transformation soundness -------------------------------------------------

Verdict transform_soundness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t runs = 0, mismatches = 0;
  std::string first;
  auto check = [&](const minic::SourceUnit& original, const minic::SourceUnit& transformed, const std::string& what) {
    const std::string entry = *minic::default_entry(original);
    const auto& f = *original.find_function(entry);
    for (int trial = 0; trial < 20; ++trial) {
      ++runs;
      auto diff = testing::behaviour_mismatch(original, transformed, entry, testing::random_args(f, rng));
      if (diff && mismatches++ == 0) first = what + ": " + *diff;
    }
  };

  std::size_t single = 0;
  const auto fixtures = testing::fixture_programs();
  for (const auto& [name, source] : fixtures) {
    const auto unit = minic::parse(source);
    for (auto op : transform::all_operators()) {
      for (const auto& site : transform::applicable_sites(unit, op)) {
        auto outcome = transform::apply_op(unit, op, site, rng());
        if (!std::holds_alternative<transform::Applied>(outcome)) {
          if (mismatches++ == 0) first = name + ": listed site was inapplicable";
          continue;
        }
        check(unit, std::get<transform::Applied>(outcome).unit, name + " " + std::string(transform::to_string(op)));
        ++single;
      }
    }
  }

  // Random pairs: a quarter fixtures, the rest freshly generated programs.
  const auto corpus = harness::synth_corpus(1000, 77);
  for (std::size_t i = 0; i < 1000; ++i) {
    const bool use_fixture = rng() % 4 == 0;
    const std::string& source = use_fixture ? fixtures[rng() % fixtures.size()].second : corpus[i].source;
    const auto unit = minic::parse(source);
    const auto genome = transform::random_genome(unit, 1 + rng() % transform::kMaxGenomeLen, rng());
    check(unit, transform::apply_genome(unit, genome).unit, "pair " + std::to_string(i) + " " + transform::to_string(genome));
  }
  const double elapsed = seconds_since(t0);
  std::string detail = std::to_string(single) + " single-op applications + 1000 genomes, " + std::to_string(runs) +
                       " runs, " + std::to_string(mismatches) + " mismatches, " + fixed(elapsed, 1) + "s (limit 300s)";
  if (mismatches) detail += "; first: " + first;
  return {mismatches == 0 && elapsed < 300, detail};
}

// ---- oracle equivalences ------------------------------------------------------

model::ModelHandle default_surrogate(std::uint64_t seed, std::vector<model::TrainingExample>* train_out = nullptr) {
  const auto cfg = harness::default_experiment(seed);
  const auto records = harness::synth_corpus(cfg.corpus.n, cfg.corpus.gen_seed, cfg.corpus.synth);
  const auto split = harness::make_split(records.size(), cfg.split);
  std::vector<model::TrainingExample> train;
  for (std::size_t i : split.train) {
    train.push_back({model::tokenize(minic::parse(records[i].source), cfg.model.vocab_hash_dim), records[i].label});
  }
  auto handle = model::train_surrogate(train, cfg.model, cfg.train, cfg.train_seed);
  handle = model::fit_layer_probes(handle, train, cfg.train);
  if (train_out) *train_out = std::move(train);
  return handle;
}

Verdict oracle_equivalences(const model::ModelHandle& surrogate) {
  std::mt19937_64 rng(4242);
  std::ostringstream detail;
  bool ok = true;

  double auc_err = 0;
  for (int set = 0; set < 200; ++set) {
    const std::size_t n = 2 + rng() % 499;
    std::vector<double> scores(n);
    std::vector<bool> correct(n);
    const bool coarse = set % 2 == 0;  // forces ties
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = i == 0 ? true : i == 1 ? false : rng() % 3 != 0;
      double s = std::uniform_real_distribution<double>(0, 1)(rng);
      scores[i] = coarse ? std::round(s * 8) / 8 : s;
    }
    auc_err = std::max(auc_err, std::abs(harness::auc(scores, correct) - testing::oracle::pairwise_auc(scores, correct)));
  }
  ok &= auc_err <= 1e-12;
  detail << "AUC max err " << auc_err << " over 200 sets";

  int threshold_mismatch = 0, sets = 0;
  while (sets < 100) {
    const std::size_t n = 2 + rng() % 99;
    std::vector<validate::ScoredOutcome> set;
    for (std::size_t i = 0; i < n; ++i) {
      const bool correct = rng() % 3 != 0;
      double s = std::uniform_real_distribution<double>(0, 1)(rng);
      if (correct) s = std::min(1.0, s + 0.2);
      if (sets % 2 == 0) s = std::round(s * 10) / 10;
      set.push_back({s, correct});
    }
    const auto correct_count = std::count_if(set.begin(), set.end(), [](auto& s) { return s.correct; });
    if (correct_count == 0 || correct_count == static_cast<long>(n)) continue;
    ++sets;
    using validate::CalibrationMode;
    threshold_mismatch += validate::calibrate_threshold(set, {0, CalibrationMode::Youden}) !=
                          testing::oracle::youden_threshold(set);
    for (double b : {0.0, 0.03, 0.1, 0.5}) {
      threshold_mismatch += validate::calibrate_threshold(set, {0, CalibrationMode::MvrBudget, b}) !=
                            testing::oracle::mvr_budget_threshold(set, b);
    }
  }
  ok &= threshold_mismatch == 0;
  detail << "; calibrate_threshold " << threshold_mismatch << " mismatches over 100 sets";

  // Ten hand-written fixtures plus forty generated programs on the default surrogate.
  std::vector<std::string> sources;
  for (const auto& [name, source] : testing::fixture_programs()) sources.push_back(source);
  for (const auto& r : harness::synth_corpus(40, 99)) sources.push_back(r.source);
  model::SurrogateClassifier classifier(surrogate);
  double dsmg_err = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto samples = classifier.infer_submodels(model::source_tokens(minic::parse(sources[i])), 30, i);
    double v = 0, d = 0;
    const double want = testing::oracle::dsmg_combined(samples, 0.5, 0.5, &v, &d);
    const auto got = validate::dsmg_score(samples);
    dsmg_err = std::max({dsmg_err, std::abs(got.combined - want), std::abs(got.variance_term - v),
                         std::abs(got.distance_term - d)});
  }
  ok &= dsmg_err <= 1e-12 && sources.size() == 50;
  detail << "; dsmg max err " << dsmg_err << " over " << sources.size() << " inputs";
  return {ok, detail.str()};
}

// ---- metric identities --------------------------------------------------------

Verdict metric_identities(const model::ModelHandle& surrogate) {
  std::ostringstream detail;
  bool ok = true;
  const double h = validate::entropy({0.5, 0.5});
  ok &= std::abs(h - std::log(2.0)) <= 1e-12;
  detail << "entropy err " << std::abs(h - std::log(2.0));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 3);
  double mi_max = 0, temp_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    model::ModelOutput o;
    o.logits.resize(2 + rng() % 5);
    for (double& x : o.logits) x = g(rng);
    o.probs = model::softmax_with_temperature(o.logits, 1.0);
    validate::Evidence e;
    e.output = o;
    e.samples.assign(2 + rng() % 30, o);
    e.temperature = 1.0;
    mi_max = std::max(mi_max, std::abs(validate::uncertainty(validate::UncertaintyMetricId::MutualInformation, e).raw));
    temp_err = std::max(temp_err, std::abs(validate::uncertainty_score(validate::UncertaintyMetricId::TemperatureScaled, e) -
                                           validate::uncertainty_score(validate::UncertaintyMetricId::Vanilla, e)));
  }
  ok &= mi_max <= 1e-12 && temp_err <= 1e-12;
  detail << "; MI on identical samples max " << mi_max << "; T=1 vs vanilla max err " << temp_err;

  model::ModelHandle still = surrogate;
  still.spec.dropout_rate = 0;
  model::SurrogateClassifier classifier(still);
  double var_max = 0;
  for (const auto& [name, source] : testing::fixture_programs()) {
    var_max = std::max(var_max, validate::score_input(classifier, model::source_tokens(minic::parse(source)), {})
                                    .variance_term);
  }
  ok &= var_max == 0;
  detail << "; p=0 variance_term max " << var_max;
  return {ok, detail.str()};
}

// ---- gradient check -----------------------------------------------------------

Verdict gradient_check(const std::vector<model::TrainingExample>& train) {
  const model::ModelSpec spec;  // defaults: L=4, H=64, V=2048
  const model::ModelHandle m = model::init_surrogate(spec, 31);
  const std::vector<model::TrainingExample> batch(train.begin(), train.begin() + 16);
  const model::ParamLayout layout(spec);
  const double l2 = 1e-4;
  std::vector<double> grad;
  model::loss_and_gradient(m, batch, l2, grad);

  std::vector<std::size_t> emb_coords;
  for (const auto& ex : batch) {
    for (auto f : ex.input.features) {
      for (std::size_t h = 0; h < spec.hidden_dim; ++h) emb_coords.push_back(f * spec.hidden_dim + h);
    }
  }
  struct Block {
    std::string name;
    std::size_t offset, size;
  };
  std::vector<Block> blocks{{"embedding", 0, 0}};
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    blocks.push_back({"layer" + std::to_string(l) + ".W", layout.layer_w[l], spec.hidden_dim * spec.hidden_dim});
    blocks.push_back({"layer" + std::to_string(l) + ".b", layout.layer_b[l], spec.hidden_dim});
  }
  blocks.push_back({"head.W", layout.head_w, spec.num_classes * spec.hidden_dim});
  blocks.push_back({"head.b", layout.head_b, spec.num_classes});

  std::mt19937_64 rng(5);
  const double h = 1e-6;
  double worst = 0;
  std::string worst_at;
  std::size_t coords = 0;
  for (const auto& block : blocks) {
    for (int trial = 0; trial < 10; ++trial, ++coords) {
      const std::size_t idx =
          block.name == "embedding" ? emb_coords[rng() % emb_coords.size()] : block.offset + rng() % block.size;
      model::ModelHandle plus = m, minus = m;
      plus.params[idx] += h;
      minus.params[idx] -= h;
      std::vector<double> unused;
      const double numeric =
          (model::loss_and_gradient(plus, batch, l2, unused) - model::loss_and_gradient(minus, batch, l2, unused)) /
          (2 * h);
      const double rel = std::abs(numeric - grad[idx]) / std::max({std::abs(numeric), std::abs(grad[idx]), 1e-10});
      if (rel > worst) {
        worst = rel;
        worst_at = block.name;
      }
    }
  }
  return {worst <= 1e-3, std::to_string(coords) + " coordinates (10 per parameter block), max rel err " +
                             std::to_string(worst) + " at " + worst_at + " (limit 1e-3)"};
}

// ---- desk-scale experiment ----------------------------------------------------

struct DeskRuns {
  std::vector<harness::MetricsReport> reports;  // seeds 1..5
  double seconds = 0;
};

DeskRuns run_desk_scale() {
  DeskRuns runs;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) runs.reports.push_back(harness::run_pipeline(harness::default_experiment(seed)));
  runs.seconds = seconds_since(t0);
  return runs;
}

Verdict validation_quality(const DeskRuns& runs) {
  std::ostringstream detail;
  bool ok = runs.seconds < 600;
  double dsmg_mean = 0, vanilla_mean = 0;
  detail << "AUC per seed";
  for (const auto& r : runs.reports) {
    ok &= !r.partial && r.auc >= 0.70;
    dsmg_mean += r.auc / runs.reports.size();
    vanilla_mean += r.metric_auc.at("vanilla") / runs.reports.size();
    detail << ' ' << fixed(r.auc);
  }
  ok &= dsmg_mean >= vanilla_mean - 0.02;
  detail << " (each >= 0.70); mean " << fixed(dsmg_mean) << " vs vanilla " << fixed(vanilla_mean) << " - 0.02; "
         << fixed(runs.seconds, 1) << "s for 5 full experiments (limit 600s)";
  return {ok, detail.str()};
}

Verdict end_to_end_adaptation(const DeskRuns& runs) {
  std::ostringstream detail;
  int passing = 0;
  detail << "corrected/regressed per seed";
  for (const auto& r : runs.reports) {
    const bool seed_ok = r.corrected_fraction >= 0.10 && r.regressed_fraction <= 0.026;
    passing += seed_ok;
    detail << ' ' << fixed(r.corrected_fraction) << '/' << fixed(r.regressed_fraction, 4) << (seed_ok ? "" : "(x)");
  }
  detail << "; " << passing << " of 5 seeds meet >= 0.10 and <= 0.026 (need 4)";
  return {passing >= 4, detail.str()};
}

// ---- strategy ordering --------------------------------------------------------

Verdict strategy_ordering(const model::ModelHandle& surrogate, double tau) {
  model::SurrogateClassifier classifier(surrogate);
  const auto validation = harness::default_experiment(1).validation;

  // The first 50 out-of-scope programs of a held-out generated corpus.
  std::vector<minic::SourceUnit> pool;
  for (const auto& r : harness::synth_corpus(2000, 1001)) {
    auto unit = minic::parse(r.source);
    if (validate::score_input(classifier, model::source_tokens(unit), validation).combined < tau) pool.push_back(unit);
    if (pool.size() == 50) break;
  }

  // Equal budget B = N (G + 1). Each strategy keeps its own stopping rule: AES
  // runs its G generations, HC stops on stall, Random at the first in-scope
  // candidate.
  search::SearchConfig cfg;
  search::SearchConfig random_cfg = cfg;
  random_cfg.early_stop_tau = tau;
  const std::size_t budget = cfg.effective_budget();
  const std::uint64_t reps = 5;
  std::size_t aes_wins = 0, histories = 0, monotone = 0, over_budget = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double mean[3] = {0, 0, 0};
    const search::Strategy strategies[3] = {search::Strategy::AES, search::Strategy::HillClimb, search::Strategy::Random};
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      const std::uint64_t seed = 1000 * i + rep;
      for (int s = 0; s < 3; ++s) {
        search::DsmgFitness fitness(classifier, validation);
        auto result = search::run_strategy(strategies[s], pool[i], fitness,
                                           strategies[s] == search::Strategy::Random ? random_cfg : cfg, seed);
        mean[s] += result.best.fitness / reps;
        over_budget += result.evaluations_used > budget;
        ++histories;
        bool mono = true;
        for (std::size_t h = 1; h < result.history.size(); ++h) mono &= result.history[h].best >= result.history[h - 1].best;
        monotone += mono;
      }
    }
    aes_wins += mean[0] >= mean[1] && mean[0] >= mean[2];
  }
  const double rate = pool.empty() ? 0 : static_cast<double>(aes_wins) / pool.size();
  std::ostringstream detail;
  detail << "mean of " << reps << " seeds: AES >= HC and >= Random on " << aes_wins << " of " << pool.size() << " inputs (" << fixed(100 * rate, 0)
         << "%, need 70% of 50); monotone histories " << monotone << " of " << histories << "; budget " << budget
         << ", overruns " << over_budget;
  return {pool.size() == 50 && rate >= 0.70 && monotone == histories && over_budget == 0, detail.str()};
}

// ---- CLI determinism ------------------------------------------------------------

struct CliRun {
  int code;
  std::string out;
};

CliRun invoke(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = cli::run_cli(args, in, out, err);
  return {code, out.str()};
}

// Report JSON without its wall-clock block.
std::string report_without_timing(const std::string& path) {
  auto j = nlohmann::json::parse(testing::read_file(path));
  j.erase("timing");
  return j.dump();
}

Verdict cli_determinism() {
  const std::string loops = SR_FIXTURE_DIR "/programs/loops.mc";
  const std::string model_path = testing::temp_path("acc_model.srm");
  std::ostringstream detail;
  bool ok = true;
  std::size_t compared = 0;

  // One entry per subcommand: run twice with fresh outputs, compare stdout, exit code and files.
  struct Case {
    std::string name;
    std::function<std::vector<std::string>(const std::string& suffix)> args;
    std::function<std::string(const std::string& suffix)> artefact;
    std::string input;
  };
  auto file = [](const std::string& stem) { return [stem](const std::string& s) { return testing::temp_path(stem + s); }; };
  const std::string exp_cfg = testing::temp_path("acc_experiment.json");
  std::ofstream(exp_cfg) << R"({"corpus": {"n": 300}})";
  model::LineServer* server_ptr = nullptr;

  std::vector<Case> cases = {
      {"train", [&](const std::string& s) { return std::vector<std::string>{"train", "--n", "300", "--seed", "3", "--out", file("acc_train")(s)}; },
       [&](const std::string& s) { return testing::read_file(file("acc_train")(s)); }, ""},
      {"gen-corpus", [&](const std::string& s) { return std::vector<std::string>{"gen-corpus", "--n", "300", "--seed", "3", "--out", file("acc_corpus")(s)}; },
       [&](const std::string& s) { return testing::read_file(file("acc_corpus")(s)); }, ""},
      {"parse", [&](const std::string&) { return std::vector<std::string>{"parse", loops}; }, nullptr, ""},
      {"run", [&](const std::string&) { return std::vector<std::string>{"run", loops, "4", "7"}; }, nullptr, ""},
      {"transform", [&](const std::string&) { return std::vector<std::string>{"transform", loops, "--op", "1", "--site", "0", "--seed", "9"}; }, nullptr, ""},
      {"validate", [&](const std::string&) { return std::vector<std::string>{"validate", loops, "--model", model_path, "--k", "30", "--seed", "4"}; }, nullptr, ""},
      {"adapt", [&](const std::string& s) { return std::vector<std::string>{"adapt", loops, "--model", model_path, "--strategy", "aes", "--seed", "4", "--tau", "1.1", "--out", file("acc_adapt")(s)}; },
       [&](const std::string& s) { return testing::read_file(file("acc_adapt")(s)); }, ""},
      {"experiment", [&](const std::string& s) { return std::vector<std::string>{"experiment", "--config", exp_cfg, "--seed", "2", "--out", file("acc_report")(s)}; },
       [&](const std::string& s) { return report_without_timing(file("acc_report")(s)); }, ""},
      {"serve", [&](const std::string&) { return std::vector<std::string>{"serve", "--model", model_path, "--stdio"}; }, nullptr,
       R"({"id": 1, "op": "infer", "tokens": ["int", "x"]})" "\n" R"({"id": 2, "op": "infer_submodels", "tokens": ["x"], "k": 4, "base_seed": 3})" "\n"},
      {"check-protocol", [&](const std::string&) {
         return std::vector<std::string>{"check-protocol", "--endpoint", "127.0.0.1:" + std::to_string(server_ptr->port())}; }, nullptr, ""},
  };

  if (invoke({"train", "--n", "300", "--seed", "3", "--out", model_path}).code != cli::kExitOk) return {false, "training the model failed"};
  model::SurrogateClassifier backend(model::load_model(model_path));
  model::LineServer server({"127.0.0.1", 0}, [&backend](const std::string& line) { return model::protocol::handle_request(line, backend); });
  server.start_background();
  server_ptr = &server;

  std::vector<std::string> differing;
  for (const auto& c : cases) {
    auto a = invoke(c.args(".a"), c.input);
    auto b = invoke(c.args(".b"), c.input);
    bool same = a.code == b.code && a.code == cli::kExitOk;
    // Outputs naming their own output path differ only by that path.
    auto strip = [](std::string text, const std::string& suffix) {
      for (std::size_t at; (at = text.find(suffix)) != std::string::npos;) text.erase(at, suffix.size());
      return text;
    };
    same &= strip(a.out, ".a") == strip(b.out, ".b");
    if (c.artefact) same &= c.artefact(".a") == c.artefact(".b");
    ++compared;
    if (!same) differing.push_back(c.name);
  }
  server.stop();
  ok = differing.empty();
  detail << compared << " subcommands run twice, byte-identical stdout and files";
  if (!ok) {
    detail << "; differing:";
    for (const auto& d : differing) detail << ' ' << d;
  }
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Verdict()>& criterion) {
    if (!filter.empty() && name.find(filter) == std::string::npos) return;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criterion();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.passed;
    std::cout << (v.passed ? "PASS " : "FAIL ") << name << " [" << fixed(seconds_since(t0), 1) << "s]: " << v.detail
              << std::endl;
  };

  // Shared: the seed-1 default surrogate and the five default experiments.
  std::vector<model::TrainingExample> train;
  std::optional<model::ModelHandle> surrogate;
  auto seed1 = [&]() -> const model::ModelHandle& {
    if (!surrogate) surrogate = default_surrogate(1, &train);
    return *surrogate;
  };
  std::optional<DeskRuns> desk;
  auto desk_runs = [&]() -> const DeskRuns& {
    if (!desk) desk = run_desk_scale();
    return *desk;
  };

  report("transformation-soundness", transform_soundness);
  report("oracle-equivalences", [&] { return oracle_equivalences(seed1()); });
  report("metric-identities", [&] { return metric_identities(seed1()); });
  report("gradient-check", [&] {
    seed1();
    return gradient_check(train);
  });
  report("desk-scale-validation-quality", [&] { return validation_quality(desk_runs()); });
  report("end-to-end-adaptation", [&] { return end_to_end_adaptation(desk_runs()); });
  report("strategy-ordering", [&] { return strategy_ordering(seed1(), desk_runs().reports.front().tau); });
  report("cli-determinism", cli_determinism);

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failures ? 1 : 0;
}
