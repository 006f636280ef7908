#include "scope_refine/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "scope_refine/minic/parser.hpp"

namespace scope_refine::harness {

using nlohmann::json;

Split make_split(std::size_t n, const SplitSpec& spec) {
  if (spec.train < 0 || spec.calibrate < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.calibrate + spec.test - 1.0) > 1e-9) {
    throw HarnessError(HarnessErrorKind::InvalidConfig, "split fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  auto n_cal = static_cast<std::size_t>(std::llround(spec.calibrate * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_cal = std::min(n_cal, n - n_train);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.calibrate.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal), order.end());
  for (auto* part : {&s.train, &s.calibrate, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

ExperimentConfig default_experiment(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.corpus.gen_seed = seed;
  cfg.split.seed = seed;
  cfg.train_seed = seed;
  cfg.validation.base_seed = seed;
  cfg.search_seed = seed;
  return cfg;
}

// ---- config JSON ----------------------------------------------------------

namespace {

std::string_view mode_name(validate::CalibrationMode m) {
  switch (m) {
    case validate::CalibrationMode::Fixed: return "fixed";
    case validate::CalibrationMode::MvrBudget: return "mvr-budget";
    case validate::CalibrationMode::Youden: return "youden";
  }
  return "?";
}

validate::CalibrationMode mode_from_name(const std::string& s) {
  if (s == "fixed") return validate::CalibrationMode::Fixed;
  if (s == "mvr-budget") return validate::CalibrationMode::MvrBudget;
  if (s == "youden") return validate::CalibrationMode::Youden;
  throw HarnessError(HarnessErrorKind::InvalidConfig, "unknown threshold mode " + s);
}

// Reads the keys of one JSON object into fields; rejects unknown keys and
// wrong types with the offending path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "expected a string");
    }
    out = v.get<T>();
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  // Nested object, if present.
  const json* object(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(key.c_str(), "unknown field");
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& why) const {
    std::string where = *key ? path(key) : (path_.empty() ? "config" : path_);
    throw HarnessError(HarnessErrorKind::InvalidConfig, where + ": " + why);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["corpus"] = {{"path", c.corpus.path},
                 {"n", c.corpus.n},
                 {"gen_seed", c.corpus.gen_seed},
                 {"rule", c.corpus.synth.rule},
                 {"compact_safe", c.corpus.synth.compact_safe},
                 {"compact_risky", c.corpus.synth.compact_risky},
                 {"extra_risk", c.corpus.synth.extra_risk}};
  j["split"] = {{"train", c.split.train}, {"calibrate", c.split.calibrate}, {"test", c.split.test},
                {"seed", c.split.seed}};
  j["model"] = {{"num_layers", c.model.num_layers},
                {"hidden_dim", c.model.hidden_dim},
                {"num_classes", c.model.num_classes},
                {"vocab_hash_dim", c.model.vocab_hash_dim},
                {"dropout_rate", c.model.dropout_rate}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"l2", c.train.l2},
                {"probe_epochs", c.train.probe_epochs},
                {"probe_learning_rate", c.train.probe_learning_rate},
                {"seed", c.train_seed}};
  j["ensemble_size"] = c.ensemble_size;
  j["validation"] = {{"k", c.validation.k},
                     {"base_seed", c.validation.base_seed},
                     {"w_var", c.validation.weights.w_var},
                     {"w_dist", c.validation.weights.w_dist},
                     {"layer_weights", c.validation.layer_weights}};
  j["threshold"] = {{"tau", c.threshold.tau},
                    {"mode", mode_name(c.threshold.mode)},
                    {"mvr_budget", c.threshold.mvr_budget}};
  const auto& s = c.search;
  j["search"] = {{"population", s.population},
                 {"generations", s.generations},
                 {"tournament", s.tournament},
                 {"crossover_rate", s.crossover_rate},
                 {"mutation_rate", s.mutation_rate},
                 {"elitism", s.elitism},
                 {"budget", s.budget ? json(*s.budget) : json(nullptr)},
                 {"early_stop_tau", s.early_stop_tau ? json(*s.early_stop_tau) : json(nullptr)},
                 {"max_stall", s.max_stall},
                 {"seed", c.search_seed}};
  j["strategy"] = c.strategy ? std::string(search::to_string(*c.strategy)) : "none";
  return j;
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  Reader top(j, "");
  if (const json* o = top.object("corpus")) {
    Reader r(*o, "corpus");
    r.get("path", c.corpus.path);
    r.get("n", c.corpus.n);
    r.get("gen_seed", c.corpus.gen_seed);
    r.get("rule", c.corpus.synth.rule);
    r.get("compact_safe", c.corpus.synth.compact_safe);
    r.get("compact_risky", c.corpus.synth.compact_risky);
    r.get("extra_risk", c.corpus.synth.extra_risk);
    r.finish();
  }
  if (const json* o = top.object("split")) {
    Reader r(*o, "split");
    r.get("train", c.split.train);
    r.get("calibrate", c.split.calibrate);
    r.get("test", c.split.test);
    r.get("seed", c.split.seed);
    r.finish();
  }
  if (const json* o = top.object("model")) {
    Reader r(*o, "model");
    r.get("num_layers", c.model.num_layers);
    r.get("hidden_dim", c.model.hidden_dim);
    r.get("num_classes", c.model.num_classes);
    r.get("vocab_hash_dim", c.model.vocab_hash_dim);
    r.get("dropout_rate", c.model.dropout_rate);
    r.finish();
  }
  if (const json* o = top.object("train")) {
    Reader r(*o, "train");
    r.get("epochs", c.train.epochs);
    r.get("batch_size", c.train.batch_size);
    r.get("learning_rate", c.train.learning_rate);
    r.get("l2", c.train.l2);
    r.get("probe_epochs", c.train.probe_epochs);
    r.get("probe_learning_rate", c.train.probe_learning_rate);
    r.get("seed", c.train_seed);
    r.finish();
  }
  top.get("ensemble_size", c.ensemble_size);
  if (const json* o = top.object("validation")) {
    Reader r(*o, "validation");
    r.get("k", c.validation.k);
    r.get("base_seed", c.validation.base_seed);
    r.get("w_var", c.validation.weights.w_var);
    r.get("w_dist", c.validation.weights.w_dist);
    if (const json* lw = r.object("layer_weights")) {
      if (!lw->is_array()) r.fail("layer_weights", "expected an array of numbers");
      c.validation.layer_weights.clear();
      for (const auto& w : *lw) {
        if (!w.is_number()) r.fail("layer_weights", "expected an array of numbers");
        c.validation.layer_weights.push_back(w.get<double>());
      }
    }
    r.finish();
  }
  if (const json* o = top.object("threshold")) {
    Reader r(*o, "threshold");
    r.get("tau", c.threshold.tau);
    std::string mode(mode_name(c.threshold.mode));
    r.get("mode", mode);
    c.threshold.mode = mode_from_name(mode);
    r.get("mvr_budget", c.threshold.mvr_budget);
    r.finish();
  }
  if (const json* o = top.object("search")) {
    Reader r(*o, "search");
    auto& s = c.search;
    r.get("population", s.population);
    r.get("generations", s.generations);
    r.get("tournament", s.tournament);
    r.get("crossover_rate", s.crossover_rate);
    r.get("mutation_rate", s.mutation_rate);
    r.get("elitism", s.elitism);
    r.get_optional("budget", s.budget);
    r.get_optional("early_stop_tau", s.early_stop_tau);
    r.get("max_stall", s.max_stall);
    r.get("seed", c.search_seed);
    r.finish();
  }
  std::string strategy = c.strategy ? std::string(search::to_string(*c.strategy)) : "none";
  top.get("strategy", strategy);
  if (strategy == "none") {
    c.strategy.reset();
  } else if (auto s = search::strategy_from_name(strategy)) {
    c.strategy = *s;
  } else {
    throw HarnessError(HarnessErrorKind::InvalidConfig, "strategy: unknown strategy " + strategy);
  }
  top.finish();
  return c;
}

// ---- pipeline -------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Prepared {
  minic::SourceUnit unit;
  std::vector<std::string> tokens;
  model::TokenizedInput input;
};

std::vector<model::TrainingExample> examples(const std::vector<Prepared>& items,
                                             const std::vector<CorpusRecord>& records,
                                             const std::vector<std::size_t>& idx) {
  std::vector<model::TrainingExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back({items[i].input, records[i].label});
  return out;
}

std::vector<model::ModelOutput> outputs_of(const std::vector<model::SubmodelSample>& samples) {
  std::vector<model::ModelOutput> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.output);
  return out;
}

}  // namespace

MetricsReport run_pipeline(const ExperimentConfig& cfg) {
  const auto started = Clock::now();
  cfg.model.validate();
  if (cfg.strategy) cfg.search.validate();
  if (cfg.ensemble_size < 2) throw HarnessError(HarnessErrorKind::InvalidConfig, "ensemble_size must be >= 2");

  MetricsReport report;
  report.config = cfg;

  const std::vector<CorpusRecord> records =
      cfg.corpus.path.empty() ? synth_corpus(cfg.corpus.n, cfg.corpus.gen_seed, cfg.corpus.synth)
                              : load_corpus(cfg.corpus.path);
  std::vector<Prepared> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    if (r.label >= cfg.model.num_classes) {
      throw HarnessError(HarnessErrorKind::InvalidConfig, "label of " + r.id + " exceeds num_classes");
    }
    Prepared p;
    p.unit = minic::parse(r.source);
    p.tokens = model::source_tokens(p.unit);
    p.input = model::tokenize(p.tokens, cfg.model.vocab_hash_dim);
    items.push_back(std::move(p));
  }
  const Split split = make_split(records.size(), cfg.split);
  if (split.train.empty() || split.calibrate.empty() || split.test.empty()) {
    throw HarnessError(HarnessErrorKind::InvalidConfig, "every split part must be non-empty");
  }

  const auto train_set = examples(items, records, split.train);
  model::ModelHandle handle = model::train_surrogate(train_set, cfg.model, cfg.train, cfg.train_seed);
  handle = model::fit_layer_probes(handle, train_set, cfg.train);
  report.train_accuracy = handle.train_accuracy;
  model::SurrogateClassifier classifier(handle);

  // Member 0 is the surrogate itself.
  std::vector<model::SurrogateClassifier> ensemble;
  ensemble.push_back(classifier);
  for (std::size_t m = 1; m < cfg.ensemble_size; ++m) {
    ensemble.emplace_back(model::train_surrogate(train_set, cfg.model, cfg.train, cfg.train_seed + m));
  }

  // Calibration.
  std::vector<validate::ScoredOutcome> cal_scores;
  std::vector<validate::LabelledLogits> cal_logits;
  for (std::size_t i : split.calibrate) {
    auto out = classifier.infer(items[i].tokens);
    auto score = validate::score_input(classifier, items[i].tokens, cfg.validation);
    cal_scores.push_back({score.combined, out.predicted() == records[i].label});
    cal_logits.push_back({out.logits, records[i].label});
  }
  report.tau = validate::calibrate_threshold(cal_scores, cfg.threshold);
  report.temperature = validate::calibrate_temperature(cal_logits);

  // Baseline and validation on the test split.
  const std::size_t n = split.test.size();
  report.test_size = n;
  std::vector<std::size_t> labels, baseline, adapted;
  std::vector<bool> correct;
  std::vector<double> dsmg;
  std::vector<validate::Verdict> verdicts;
  std::map<validate::UncertaintyMetricId, std::vector<double>> metric_scores;
  for (std::size_t i : split.test) {
    const auto& tokens = items[i].tokens;
    validate::Evidence ev;
    ev.output = classifier.infer(tokens);
    auto samples = classifier.infer_submodels(tokens, cfg.validation.k, cfg.validation.base_seed);
    auto score = validate::dsmg_score(samples, cfg.validation.weights, cfg.validation.layer_weights);
    ev.samples = outputs_of(samples);
    for (auto& member : ensemble) ev.ensemble.push_back(member.infer(tokens));
    ev.temperature = report.temperature;
    for (auto metric : validate::kAllUncertaintyMetrics) {
      metric_scores[metric].push_back(validate::uncertainty_score(metric, ev));
    }
    labels.push_back(records[i].label);
    baseline.push_back(ev.output->predicted());
    correct.push_back(baseline.back() == labels.back());
    dsmg.push_back(score.combined);
    verdicts.push_back(validate::classify_input(score.combined, report.tau).verdict);

    ItemResult item;
    item.id = records[i].id;
    item.label = labels.back();
    item.baseline_prediction = baseline.back();
    item.score = score.combined;
    item.in_scope = verdicts.back() == validate::Verdict::InScope;
    item.outcome = "not-adapted";
    item.final_score = score.combined;
    item.final_prediction = baseline.back();
    report.items.push_back(std::move(item));
  }
  report.baseline = classification_metrics(baseline, labels);
  report.baseline_mispredictions = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), false));
  report.flagged = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), validate::Verdict::OutOfScope));

  // Undefined when the test split holds a single outcome class; recorded, not fatal.
  try {
    report.auc = auc(dsmg, correct);
    for (const auto& [metric, scores] : metric_scores) {
      report.metric_auc[std::string(validate::to_string(metric))] = auc(scores, correct);
    }
  } catch (const HarnessError& e) {
    report.partial = true;
    report.failures.push_back(std::string("auc: ") + e.what());
  }
  try {
    report.rates = cvr_mvr(verdicts, correct);
  } catch (const HarnessError& e) {
    report.partial = true;
    report.failures.push_back(std::string("cvr/mvr: ") + e.what());
  }

  // Adaptation of out-of-scope inputs.
  adapted = baseline;
  double transform_seconds = 0, adapt_seconds = 0;
  std::size_t adapted_inputs = 0;
  if (cfg.strategy) {
    for (std::size_t t = 0; t < n; ++t) {
      ItemResult& item = report.items[t];
      if (item.in_scope) continue;
      const auto t0 = Clock::now();
      try {
        auto out = search::adapt(items[split.test[t]].unit, classifier, cfg.validation, report.tau, *cfg.strategy,
                                 cfg.search, cfg.search_seed + t);
        item.outcome = std::string(search::to_string(out.kind));
        item.final_score = out.after.combined;
        item.final_prediction = out.prediction;
        item.evaluations = out.evaluations();
        item.genome = transform::to_string(out.genome);
        if (out.search) {
          report.applied_transformations += out.search->applied_transformations;
          transform_seconds += out.search->transform_seconds;
        }
        report.evaluations += item.evaluations;
      } catch (const std::exception& e) {
        item.outcome = "failed";
        report.partial = true;
        report.failures.push_back(item.id + ": " + e.what());
      }
      adapt_seconds += seconds_since(t0);
      ++adapted_inputs;
      adapted[t] = item.final_prediction;
    }
  }
  report.adapted = classification_metrics(adapted, labels);
  for (std::size_t t = 0; t < n; ++t) {
    bool was = baseline[t] == labels[t], now = adapted[t] == labels[t];
    report.corrected += !was && now;
    report.regressed += was && !now;
  }
  const std::size_t baseline_correct = n - report.baseline_mispredictions;
  report.corrected_fraction = report.baseline_mispredictions == 0
                                  ? 0.0
                                  : static_cast<double>(report.corrected) /
                                        static_cast<double>(report.baseline_mispredictions);
  report.regressed_fraction =
      baseline_correct == 0 ? 0.0 : static_cast<double>(report.regressed) / static_cast<double>(baseline_correct);

  report.timing.tps =
      transform_seconds > 0 ? static_cast<double>(report.applied_transformations) / transform_seconds : 0.0;
  report.timing.mean_adapt_seconds = adapted_inputs ? adapt_seconds / static_cast<double>(adapted_inputs) : 0.0;
  report.timing.total_seconds = seconds_since(started);
  return report;
}

// ---- report JSON ----------------------------------------------------------

namespace {

json metrics_json(const ClassificationMetrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ClassificationMetrics metrics_from(const json& j) {
  return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}

}  // namespace

json to_json(const MetricsReport& r) {
  json j;
  j["version"] = kReportVersion;
  j["config"] = to_json(r.config);
  j["partial"] = r.partial;
  j["failures"] = r.failures;
  j["train_accuracy"] = r.train_accuracy;
  j["tau"] = r.tau;
  j["temperature"] = r.temperature;
  j["baseline"] = metrics_json(r.baseline);
  j["adapted"] = metrics_json(r.adapted);
  j["auc"] = r.auc;
  j["metric_auc"] = r.metric_auc;
  j["cvr"] = r.rates.cvr;
  j["mvr"] = r.rates.mvr;
  j["test_size"] = r.test_size;
  j["baseline_mispredictions"] = r.baseline_mispredictions;
  j["flagged"] = r.flagged;
  j["corrected"] = r.corrected;
  j["regressed"] = r.regressed;
  j["corrected_fraction"] = r.corrected_fraction;
  j["regressed_fraction"] = r.regressed_fraction;
  j["applied_transformations"] = r.applied_transformations;
  j["evaluations"] = r.evaluations;
  j["timing"] = {{"tps", r.timing.tps},
                 {"mean_adapt_seconds", r.timing.mean_adapt_seconds},
                 {"total_seconds", r.timing.total_seconds}};
  json items = json::array();
  for (const auto& it : r.items) {
    items.push_back({{"id", it.id},
                     {"label", it.label},
                     {"baseline_prediction", it.baseline_prediction},
                     {"score", it.score},
                     {"in_scope", it.in_scope},
                     {"outcome", it.outcome},
                     {"final_score", it.final_score},
                     {"final_prediction", it.final_prediction},
                     {"evaluations", it.evaluations},
                     {"genome", it.genome}});
  }
  j["items"] = std::move(items);
  return j;
}

MetricsReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("version")) {
    throw HarnessError(HarnessErrorKind::VersionMismatch, "report has no version tag");
  }
  if (j.at("version") != kReportVersion) {
    throw HarnessError(HarnessErrorKind::VersionMismatch,
                       "report version " + j.at("version").dump() + ", expected " + std::to_string(kReportVersion));
  }
  try {
    MetricsReport r;
    r.config = experiment_from_json(j.at("config"));
    r.partial = j.at("partial").get<bool>();
    r.failures = j.at("failures").get<std::vector<std::string>>();
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.tau = j.at("tau").get<double>();
    r.temperature = j.at("temperature").get<double>();
    r.baseline = metrics_from(j.at("baseline"));
    r.adapted = metrics_from(j.at("adapted"));
    r.auc = j.at("auc").get<double>();
    r.metric_auc = j.at("metric_auc").get<std::map<std::string, double>>();
    r.rates = {j.at("cvr").get<double>(), j.at("mvr").get<double>()};
    r.test_size = j.at("test_size").get<std::size_t>();
    r.baseline_mispredictions = j.at("baseline_mispredictions").get<std::size_t>();
    r.flagged = j.at("flagged").get<std::size_t>();
    r.corrected = j.at("corrected").get<std::size_t>();
    r.regressed = j.at("regressed").get<std::size_t>();
    r.corrected_fraction = j.at("corrected_fraction").get<double>();
    r.regressed_fraction = j.at("regressed_fraction").get<double>();
    r.applied_transformations = j.at("applied_transformations").get<std::size_t>();
    r.evaluations = j.at("evaluations").get<std::size_t>();
    const json& t = j.at("timing");
    r.timing = {t.at("tps").get<double>(), t.at("mean_adapt_seconds").get<double>(),
                t.at("total_seconds").get<double>()};
    for (const auto& it : j.at("items")) {
      ItemResult item;
      item.id = it.at("id").get<std::string>();
      item.label = it.at("label").get<std::size_t>();
      item.baseline_prediction = it.at("baseline_prediction").get<std::size_t>();
      item.score = it.at("score").get<double>();
      item.in_scope = it.at("in_scope").get<bool>();
      item.outcome = it.at("outcome").get<std::string>();
      item.final_score = it.at("final_score").get<double>();
      item.final_prediction = it.at("final_prediction").get<std::size_t>();
      item.evaluations = it.at("evaluations").get<std::size_t>();
      item.genome = it.at("genome").get<std::string>();
      r.items.push_back(std::move(item));
    }
    return r;
  } catch (const json::exception& e) {
    throw HarnessError(HarnessErrorKind::InvalidConfig, std::string("malformed report: ") + e.what());
  }
}

void report_write(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError(HarnessErrorKind::IoError, "cannot write " + path);
  out << to_json(report).dump(2) << '\n';
  if (!out) throw HarnessError(HarnessErrorKind::IoError, "write failed on " + path);
}

MetricsReport report_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError(HarnessErrorKind::IoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw HarnessError(HarnessErrorKind::IoError, path + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace scope_refine::harness
