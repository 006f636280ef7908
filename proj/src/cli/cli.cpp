#include "scope_refine/cli/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "scope_refine/harness/corpus.hpp"
#include "scope_refine/harness/experiment.hpp"
#include "scope_refine/minic/interpreter.hpp"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/minic/printer.hpp"
#include "scope_refine/minic/scope.hpp"
#include "scope_refine/model/classifier.hpp"
#include "scope_refine/model/net.hpp"
#include "scope_refine/model/protocol.hpp"
#include "scope_refine/search/search.hpp"
#include "scope_refine/transform/transform.hpp"
#include "scope_refine/validate/validate.hpp"

namespace scope_refine::cli {

// Insertion order keeps fields in the order they are documented.
using json = nlohmann::ordered_json;

namespace {

// A failure already phrased for the user; ends the run with kExitFailure.
struct Diagnostic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A well-formed command that cannot run as given; ends with kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Format { Tsv, Json };

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Diagnostic(path + ": cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Diagnostic(path + ": cannot write file");
}

// Parsed and resolved, with errors as `path:line:col: message`.
minic::SourceUnit load_program(const std::string& path, const std::string& text) {
  minic::SourceUnit unit;
  try {
    unit = minic::parse(text);
  } catch (const minic::ParseError& e) {
    throw Diagnostic(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.message());
  }
  try {
    minic::resolve_scopes(unit);
  } catch (const minic::SemanticError& e) {
    throw Diagnostic(path + ": " + e.what());
  }
  return unit;
}

minic::SourceUnit load_program(const std::string& path) { return load_program(path, read_file(path)); }

// The external model when SCOPE_REFINE_MODEL_ENDPOINT is set, otherwise the
// surrogate stored at `model_path`.
std::unique_ptr<model::Classifier> make_classifier(const std::string& model_path) {
  if (auto endpoint = model::endpoint_from_env()) return std::make_unique<model::RemoteClassifier>(*endpoint);
  if (model_path.empty()) throw UsageError("--model is required unless " + std::string(model::kEndpointEnvVar) + " is set");
  return std::make_unique<model::SurrogateClassifier>(model::load_model(model_path));
}

// Key/value lines in TSV, one object in JSON.
void emit_record(std::ostream& out, Format format, const json& record) {
  if (format == Format::Json) {
    out << record.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : record.items()) {
    out << key << '\t' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

std::optional<transform::OperatorId> parse_operator(const std::string& text) {
  try {
    std::size_t used = 0;
    int n = std::stoi(text, &used);
    if (used == text.size()) return transform::operator_from_number(n);
  } catch (const std::exception&) {
  }
  return transform::operator_from_name(text);
}

minic::Value parse_value(const std::string& text) {
  if (text == "true") return minic::Value::of_bool(true);
  if (text == "false") return minic::Value::of_bool(false);
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used == text.size()) return minic::Value::of_int(v);
  } catch (const std::exception&) {
  }
  throw UsageError("argument '" + text + "' is neither an integer nor a boolean");
}

// ---- subcommands ------------------------------------------------------------

struct Common {
  Format format = Format::Tsv;
  bool verbose = false;
};

struct ParseCmd {
  std::string file;

  int run(const Common& c, std::ostream& out) const {
    minic::SourceUnit unit = load_program(file);
    std::string canonical = minic::print_source(unit);
    if (c.format == Format::Json) {
      out << json{{"file", file}, {"source", canonical}}.dump(2) << '\n';
    } else {
      out << canonical;
    }
    return kExitOk;
  }
};

struct RunCmd {
  std::string file;
  std::vector<std::string> args;
  std::string entry;
  std::uint64_t fuel = minic::kDefaultFuel;

  int run(const Common& c, std::ostream& out) const {
    minic::SourceUnit unit = load_program(file);
    std::string name = entry;
    if (name.empty()) {
      auto found = minic::default_entry(unit);
      if (!found) throw UsageError("no default entry point; pass --entry");
      name = *found;
    }
    std::vector<minic::Value> values;
    for (const auto& a : args) values.push_back(parse_value(a));
    minic::RunOutcome outcome;
    try {
      outcome = minic::interpret(unit, name, values, fuel);
    } catch (const minic::InterpretError& e) {
      throw Diagnostic(file + ": " + e.what());
    }
    json record;
    if (outcome.ok()) {
      record = {{"result", "ok"}, {"value", minic::to_string(outcome.value())}};
    } else {
      record = {{"result", "fault"}, {"fault", std::string(minic::to_string(outcome.fault().kind))}};
    }
    record["steps"] = outcome.steps_used;
    emit_record(out, c.format, record);
    return kExitOk;
  }
};

struct TransformCmd {
  std::string file;
  std::string op;
  std::size_t site = 0;
  std::uint64_t seed = 0;
  bool list_sites = false;

  int run(const Common& c, std::ostream& out) const {
    minic::SourceUnit unit = load_program(file);
    auto id = parse_operator(op);
    if (!id) throw UsageError("unknown operator '" + op + "' (1-15 or a name)");
    auto sites = transform::applicable_sites(unit, *id);
    if (list_sites) {
      if (c.format == Format::Json) {
        json rows = json::array();
        for (std::size_t r = 0; r < sites.size(); ++r) {
          rows.push_back({{"rank", r}, {"node_id", sites[r].node_id}, {"index", sites[r].index}});
        }
        out << json{{"operator", std::string(transform::to_string(*id))}, {"sites", rows}}.dump(2) << '\n';
      } else {
        for (std::size_t r = 0; r < sites.size(); ++r) {
          out << r << '\t' << sites[r].node_id << '\t' << sites[r].index << '\n';
        }
      }
      return kExitOk;
    }
    if (site >= sites.size()) {
      throw Diagnostic(file + ": " + std::string(transform::to_string(*id)) + " has " + std::to_string(sites.size()) +
                       " site(s); rank " + std::to_string(site) + " is out of range");
    }
    auto outcome = transform::apply_op(unit, *id, sites[site], seed);
    const auto& applied = std::get<transform::Applied>(outcome);
    std::string canonical = minic::print_source(applied.unit);
    if (c.format == Format::Json) {
      out << json{{"operator", std::string(transform::to_string(*id))}, {"site", site}, {"source", canonical}}.dump(2)
          << '\n';
    } else {
      out << canonical;
    }
    return kExitOk;
  }
};

struct TrainCmd {
  std::string corpus;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out_path;
  model::ModelSpec spec;
  model::TrainConfig train;

  int run(const Common& c, std::ostream& out) const {
    spec.validate();
    auto records = corpus.empty() ? harness::synth_corpus(n, seed) : harness::load_corpus(corpus);
    if (records.empty()) throw Diagnostic("training corpus is empty");
    std::vector<model::TrainingExample> examples;
    for (const auto& r : records) {
      if (r.label >= spec.num_classes) throw Diagnostic(r.id + ": label exceeds the number of classes");
      examples.push_back({model::tokenize(minic::parse(r.source), spec.vocab_hash_dim), r.label});
    }
    model::ModelHandle handle = model::train_surrogate(examples, spec, train, seed);
    handle = model::fit_layer_probes(handle, examples, train);
    model::save_model(handle, out_path);
    json record = {{"model", out_path},
                   {"examples", examples.size()},
                   {"train_accuracy", handle.train_accuracy},
                   {"probe_accuracy", model::probe_accuracy(handle, examples)}};
    emit_record(out, c.format, record);
    return kExitOk;
  }
};

struct ValidateCmd {
  std::string file;
  std::string manifest;
  std::string model_path;
  std::vector<std::string> members;
  std::size_t k = 30;
  std::uint64_t seed = 0;
  std::string metric = "dsmg";
  double tau = 0.5;
  double temperature = 1.0;

  struct Row {
    std::string id;
    validate::ValidationVerdict verdict;
    json extra;  // variance/distance terms or the raw metric value
  };

  Row score(model::Classifier& classifier, const std::vector<std::unique_ptr<model::Classifier>>& ensemble,
            const std::string& id, const minic::SourceUnit& unit) const {
    auto tokens = model::source_tokens(unit);
    validate::ValidationConfig cfg;
    cfg.k = k;
    cfg.base_seed = seed;
    if (metric == "dsmg") {
      auto s = validate::score_input(classifier, tokens, cfg);
      return {id, validate::classify_input(s.combined, tau), {{"variance_term", s.variance_term}, {"distance_term", s.distance_term}}};
    }
    auto m = *validate::metric_from_name(metric);
    validate::Evidence ev;
    ev.temperature = temperature;
    ev.output = classifier.infer(tokens);
    if (validate::evidence_kind(m) == validate::EvidenceKind::Samples) {
      for (auto& s : classifier.infer_submodels(tokens, k, seed)) ev.samples.push_back(std::move(s.output));
    }
    if (validate::evidence_kind(m) == validate::EvidenceKind::Ensemble) {
      ev.ensemble.push_back(*ev.output);
      for (const auto& member : ensemble) ev.ensemble.push_back(member->infer(tokens));
    }
    auto value = validate::uncertainty(m, ev);
    validate::MetricTag tag{false, m};
    return {id, validate::classify_input(value.score, tau, tag), {{"raw", value.raw}}};
  }

  int run(const Common& c, std::ostream& out) const {
    if (file.empty() == manifest.empty()) throw UsageError("give exactly one of FILE or --manifest");
    if (metric != "dsmg" && !validate::metric_from_name(metric)) throw UsageError("unknown metric '" + metric + "'");
    if (metric == "deep-ensemble" && members.empty()) throw UsageError("deep-ensemble needs at least one --member");
    auto classifier = make_classifier(model_path);
    std::vector<std::unique_ptr<model::Classifier>> ensemble;
    for (const auto& m : members) ensemble.push_back(std::make_unique<model::SurrogateClassifier>(model::load_model(m)));

    std::vector<std::pair<std::string, minic::SourceUnit>> inputs;
    if (!manifest.empty()) {
      std::istringstream lines(read_file(manifest));
      std::string line;
      for (std::size_t n = 1; std::getline(lines, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !(j.contains("source") ? j["source"].is_string() : j.contains("path") && j["path"].is_string())) {
          throw Diagnostic(manifest + ":" + std::to_string(n) + ": expected {\"id\", \"source\" or \"path\"}");
        }
        std::string id = j["id"];
        inputs.emplace_back(id, j.contains("source") ? load_program(manifest + ":" + id, j["source"].get<std::string>())
                                                     : load_program(j["path"].get<std::string>()));
      }
    } else {
      inputs.emplace_back(file, load_program(file));
    }

    json rows = json::array();
    for (const auto& [id, unit] : inputs) {
      Row row = score(*classifier, ensemble, id, unit);
      json r = {{"id", row.id},
                {"verdict", std::string(validate::to_string(row.verdict.verdict))},
                {"score", row.verdict.score}};
      r.update(row.extra);
      if (c.format == Format::Json) {
        rows.push_back(r);
        continue;
      }
      if (!manifest.empty()) out << row.id << '\t';
      out << validate::to_string(row.verdict.verdict) << '\t' << fmt(row.verdict.score);
      for (const auto& [key, value] : row.extra.items()) out << '\t' << fmt(value.get<double>());
      out << '\n';
    }
    if (c.format == Format::Json) {
      out << json{{"metric", metric}, {"tau", tau}, {"k", k}, {"seed", seed}, {"results", rows}}.dump(2) << '\n';
    }
    return kExitOk;
  }
};

struct AdaptCmd {
  std::string file;
  std::string model_path;
  std::string strategy = "aes";
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget;
  double tau = 0.5;
  std::size_t k = 30;
  std::string out_path;

  int run(const Common& c, std::ostream& out) const {
    auto s = search::strategy_from_name(strategy);
    if (!s) throw UsageError("unknown strategy '" + strategy + "' (aes, hc or rand)");
    minic::SourceUnit unit = load_program(file);
    auto classifier = make_classifier(model_path);
    validate::ValidationConfig validation;
    validation.k = k;
    validation.base_seed = seed;
    search::SearchConfig cfg;
    cfg.budget = budget;
    cfg.validate();
    search::AdaptOutcome result = search::adapt(unit, *classifier, validation, tau, *s, cfg, seed);
    std::string canonical = minic::print_source(result.unit);
    json record = {{"outcome", std::string(search::to_string(result.kind))},
                   {"score_before", result.before.combined},
                   {"score_after", result.after.combined},
                   {"prediction_before", result.prediction_before},
                   {"prediction_after", result.prediction},
                   {"evaluations", result.evaluations()},
                   {"genome", transform::to_string(result.genome)}};
    if (!out_path.empty()) {
      write_file(out_path, canonical);
      record["output"] = out_path;
    } else if (c.format == Format::Json) {
      record["source"] = canonical;
    }
    emit_record(out, c.format, record);
    if (out_path.empty() && c.format == Format::Tsv) out << '\n' << canonical;
    return kExitOk;
  }
};

struct ExperimentCmd {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;

  int run(const Common& c, std::ostream& out, std::ostream& err) const {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) {
      auto j = nlohmann::json::parse(read_file(config_path), nullptr, false);
      if (j.is_discarded()) throw Diagnostic(config_path + ": invalid JSON");
      cfg = harness::experiment_from_json(j);
    }
    if (seed) {
      cfg.corpus.gen_seed = *seed;
      cfg.split.seed = *seed;
      cfg.train_seed = *seed;
      cfg.validation.base_seed = *seed;
      cfg.search_seed = *seed;
    }
    if (c.verbose) err << "experiment config:\n" << harness::to_json(cfg).dump(2) << '\n';
    harness::MetricsReport report = harness::run_pipeline(cfg);
    if (!out_path.empty()) harness::report_write(report, out_path);
    // Wall-clock figures stay in the report file so stdout is reproducible.
    json summary = {{"partial", report.partial},
                    {"test_size", report.test_size},
                    {"train_accuracy", report.train_accuracy},
                    {"tau", report.tau},
                    {"temperature", report.temperature},
                    {"accuracy_before", report.baseline.accuracy},
                    {"accuracy_after", report.adapted.accuracy},
                    {"f1_before", report.baseline.f1},
                    {"f1_after", report.adapted.f1},
                    {"auc", report.auc},
                    {"cvr", report.rates.cvr},
                    {"mvr", report.rates.mvr},
                    {"flagged", report.flagged},
                    {"baseline_mispredictions", report.baseline_mispredictions},
                    {"corrected_fraction", report.corrected_fraction},
                    {"regressed_fraction", report.regressed_fraction},
                    {"evaluations", report.evaluations}};
    for (const auto& [name, value] : report.metric_auc) summary["auc_" + name] = value;
    emit_record(out, c.format, summary);
    for (const auto& f : report.failures) err << "partial: " << f << '\n';
    return report.partial ? kExitFailure : kExitOk;
  }
};

struct GenCorpusCmd {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out_path;
  harness::SynthOptions options;

  int run(const Common& c, std::ostream& out) const {
    auto records = harness::synth_corpus(n, seed, options);
    if (!out_path.empty()) {
      harness::write_corpus(records, out_path);
      std::size_t positives = 0;
      for (const auto& r : records) positives += r.label;
      emit_record(out, c.format, {{"records", records.size()}, {"label_1", positives}, {"output", out_path}});
      return kExitOk;
    }
    for (const auto& r : records) out << json{{"id", r.id}, {"label", r.label}, {"source", r.source}}.dump() << '\n';
    return kExitOk;
  }
};

struct ServeCmd {
  std::string model_path;
  std::string listen = "127.0.0.1:0";
  bool stdio = false;

  int run(std::istream& in, std::ostream& out, std::ostream& err) const {
    model::SurrogateClassifier backend(model::load_model(model_path));
    if (stdio) {
      model::protocol::serve_stream(in, out, backend);
      return kExitOk;
    }
    model::LineServer server(model::parse_endpoint(listen),
                             [&backend](const std::string& line) { return model::protocol::handle_request(line, backend); });
    err << "listening on " << model::parse_endpoint(listen).host << ':' << server.port() << std::endl;
    server.serve();
    return kExitOk;
  }
};

struct CheckProtocolCmd {
  std::string endpoint;

  int run(const Common& c, std::ostream& out) const {
    std::string target = endpoint;
    if (target.empty()) {
      auto env = model::endpoint_from_env();
      if (!env) throw UsageError("--endpoint is required unless " + std::string(model::kEndpointEnvVar) + " is set");
      target = *env;
    }
    auto results = model::protocol::check_protocol(target);
    if (c.format == Format::Json) {
      json rows = json::array();
      for (const auto& r : results) rows.push_back({{"check", r.name}, {"passed", r.passed}, {"detail", r.detail}});
      out << json{{"endpoint", target}, {"checks", rows}}.dump(2) << '\n';
    } else {
      for (const auto& r : results) {
        out << (r.passed ? "pass" : "FAIL") << '\t' << r.name;
        if (!r.detail.empty()) out << '\t' << r.detail;
        out << '\n';
      }
    }
    return model::protocol::all_passed(results) ? kExitOk : kExitFailure;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"On-the-fly input refinement for code classifiers over MiniC programs.", "scope-refine"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "scope-refine 1.0");

  Common common;
  std::string format = "tsv";
  app.add_option("--format", format, "Output format for data")->check(CLI::IsMember({"tsv", "json"}))->capture_default_str();
  app.add_flag("--verbose", common.verbose, "Print the effective configuration to stderr");

  ParseCmd parse_cmd;
  auto* parse = app.add_subcommand("parse", "Print the canonical form of a MiniC file");
  parse->add_option("FILE", parse_cmd.file, "MiniC source file")->required();

  RunCmd run_cmd;
  auto* run = app.add_subcommand("run", "Interpret a MiniC file");
  run->add_option("FILE", run_cmd.file, "MiniC source file")->required();
  run->add_option("ARGS", run_cmd.args, "Entry arguments (integers, true or false)");
  run->add_option("--entry", run_cmd.entry, "Function to call (default: main_entry or the only function)");
  run->add_option("--fuel", run_cmd.fuel, "Step budget")->capture_default_str();

  TransformCmd transform_cmd;
  auto* transform = app.add_subcommand("transform", "Apply one semantic-preserving rewrite");
  transform->add_option("FILE", transform_cmd.file, "MiniC source file")->required();
  transform->add_option("--op", transform_cmd.op, "Operator number (1-15) or name")->required();
  transform->add_option("--site", transform_cmd.site, "Rank among the operator's applicable sites")->capture_default_str();
  transform->add_option("--seed", transform_cmd.seed, "Seed for fresh names")->capture_default_str();
  transform->add_flag("--list-sites", transform_cmd.list_sites, "Print the site table (rank, node id, index) instead");

  TrainCmd train_cmd;
  auto* train = app.add_subcommand("train", "Train the surrogate classifier and its layer probes");
  auto* train_corpus = train->add_option("--corpus", train_cmd.corpus, "JSONL corpus (default: synthetic)");
  train->add_option("--n", train_cmd.n, "Synthetic corpus size")->capture_default_str()->excludes(train_corpus);
  train->add_option("--seed", train_cmd.seed, "Training and corpus seed")->capture_default_str();
  train->add_option("--out", train_cmd.out_path, "Model file to write (SRM1)")->required();
  train->add_option("--layers", train_cmd.spec.num_layers, "Hidden layers L")->capture_default_str();
  train->add_option("--hidden", train_cmd.spec.hidden_dim, "Hidden width H")->capture_default_str();
  train->add_option("--vocab", train_cmd.spec.vocab_hash_dim, "Hashed vocabulary size V")->capture_default_str();
  train->add_option("--dropout", train_cmd.spec.dropout_rate, "Sub-model dropout rate p")->capture_default_str();
  train->add_option("--epochs", train_cmd.train.epochs, "Training epochs")->capture_default_str();

  ValidateCmd validate_cmd;
  auto* validate = app.add_subcommand("validate", "Score inputs and classify them as in or out of scope");
  validate->add_option("FILE", validate_cmd.file, "MiniC source file");
  validate->add_option("--manifest", validate_cmd.manifest, "JSONL of {\"id\", \"source\" or \"path\"} for batch mode");
  validate->add_option("--model", validate_cmd.model_path, "Surrogate model file");
  validate->add_option("--member", validate_cmd.members, "Extra ensemble member model (deep-ensemble)");
  validate->add_option("--k", validate_cmd.k, "Sub-models K")->capture_default_str();
  validate->add_option("--seed", validate_cmd.seed, "Base dropout seed")->capture_default_str();
  validate->add_option("--metric", validate_cmd.metric, "dsmg or a baseline uncertainty metric")->capture_default_str();
  validate->add_option("--tau", validate_cmd.tau, "In-scope threshold")->capture_default_str();
  validate->add_option("--temperature", validate_cmd.temperature, "Temperature for temperature-scaled")->capture_default_str();

  AdaptCmd adapt_cmd;
  auto* adapt = app.add_subcommand("adapt", "Search for a refined variant of an out-of-scope input");
  adapt->add_option("FILE", adapt_cmd.file, "MiniC source file")->required();
  adapt->add_option("--model", adapt_cmd.model_path, "Surrogate model file");
  adapt->add_option("--strategy", adapt_cmd.strategy, "aes, hc or rand")->capture_default_str();
  adapt->add_option("--seed", adapt_cmd.seed, "Search and dropout seed")->capture_default_str();
  adapt->add_option("--budget", adapt_cmd.budget, "Fitness evaluations (default: population x (generations + 1))");
  adapt->add_option("--tau", adapt_cmd.tau, "In-scope threshold and early-stop score")->capture_default_str();
  adapt->add_option("--k", adapt_cmd.k, "Sub-models K")->capture_default_str();
  adapt->add_option("--out", adapt_cmd.out_path, "Write the refined canonical source here");

  ExperimentCmd experiment_cmd;
  auto* experiment = app.add_subcommand("experiment", "Run the end-to-end pipeline and write a metrics report");
  experiment->add_option("--config", experiment_cmd.config_path, "Experiment config JSON (missing fields keep defaults)");
  experiment->add_option("--out", experiment_cmd.out_path, "Report JSON to write");
  experiment->add_option("--seed", experiment_cmd.seed, "Override every seed in the config");

  GenCorpusCmd gen_cmd;
  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic div-risk corpus");
  gen->add_option("--n", gen_cmd.n, "Number of programs")->capture_default_str();
  gen->add_option("--seed", gen_cmd.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_cmd.out_path, "JSONL file to write (default: stdout)");

  ServeCmd serve_cmd;
  auto* serve = app.add_subcommand("serve", "Serve a surrogate model over the NDJSON wire protocol");
  serve->add_option("--model", serve_cmd.model_path, "Surrogate model file")->required();
  auto* listen = serve->add_option("--listen", serve_cmd.listen, "host:port; port 0 picks a free one")->capture_default_str();
  serve->add_flag("--stdio", serve_cmd.stdio, "Serve stdin/stdout instead of TCP")->excludes(listen);

  CheckProtocolCmd check_cmd;
  auto* check = app.add_subcommand("check-protocol", "Run the conformance checks against a model server");
  check->add_option("--endpoint", check_cmd.endpoint, "host:port (default: $" + std::string(model::kEndpointEnvVar) + ")");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  common.format = format == "json" ? Format::Json : Format::Tsv;
  if (common.verbose) {
    CLI::App* sub = app.get_subcommands().front();
    err << "effective config (" << sub->get_name() << "):\nformat=\"" << format << "\"\n"
        << sub->config_to_str(true, false);
  }

  try {
    if (*parse) return parse_cmd.run(common, out);
    if (*run) return run_cmd.run(common, out);
    if (*transform) return transform_cmd.run(common, out);
    if (*train) return train_cmd.run(common, out);
    if (*validate) return validate_cmd.run(common, out);
    if (*adapt) return adapt_cmd.run(common, out);
    if (*experiment) return experiment_cmd.run(common, out, err);
    if (*gen) return gen_cmd.run(common, out);
    if (*serve) return serve_cmd.run(in, out, err);
    if (*check) return check_cmd.run(common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Diagnostic& e) {
    err << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace scope_refine::cli
