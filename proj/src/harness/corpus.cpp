#include "scope_refine/harness/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "scope_refine/minic/interpreter.hpp"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/minic/scope.hpp"

namespace scope_refine::harness {

using nlohmann::json;

std::string_view to_string(HarnessErrorKind kind) {
  switch (kind) {
    case HarnessErrorKind::IoError: return "IoError";
    case HarnessErrorKind::MalformedLine: return "MalformedLine";
    case HarnessErrorKind::UnparseableSource: return "UnparseableSource";
    case HarnessErrorKind::GenerationExhausted: return "GenerationExhausted";
    case HarnessErrorKind::SingleClass: return "SingleClass";
    case HarnessErrorKind::EmptyDenominator: return "EmptyDenominator";
    case HarnessErrorKind::LengthMismatch: return "LengthMismatch";
    case HarnessErrorKind::VersionMismatch: return "VersionMismatch";
    case HarnessErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "?";
}

HarnessError::HarnessError(HarnessErrorKind kind, const std::string& detail, std::optional<std::size_t> line)
    : std::runtime_error(std::string(to_string(kind)) + (line ? "(" + std::to_string(*line) + ")" : "") + ": " +
                         detail),
      kind_(kind),
      line_(line) {}

namespace {

CorpusRecord record_from_line(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw HarnessError(HarnessErrorKind::MalformedLine, "invalid JSON", line);
  }
  if (!j.is_object()) throw HarnessError(HarnessErrorKind::MalformedLine, "not an object", line);
  for (const char* key : {"id", "source", "label"}) {
    if (!j.contains(key)) throw HarnessError(HarnessErrorKind::MalformedLine, std::string("missing \"") + key + "\"", line);
  }
  if (!j["id"].is_string() || !j["source"].is_string()) {
    throw HarnessError(HarnessErrorKind::MalformedLine, "id and source must be strings", line);
  }
  if (!j["label"].is_number_unsigned()) {
    throw HarnessError(HarnessErrorKind::MalformedLine, "label must be a non-negative integer", line);
  }
  return {j["id"].get<std::string>(), j["source"].get<std::string>(), j["label"].get<std::size_t>()};
}

}  // namespace

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError(HarnessErrorKind::IoError, "cannot open " + path);
  std::vector<CorpusRecord> records;
  std::set<std::string> ids;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    CorpusRecord r = record_from_line(text, line);
    if (!ids.insert(r.id).second) throw HarnessError(HarnessErrorKind::MalformedLine, "duplicate id " + r.id, line);
    try {
      minic::resolve_scopes(minic::parse(r.source));
    } catch (const minic::ParseError& e) {
      throw HarnessError(HarnessErrorKind::UnparseableSource,
                         r.id + ": " + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                             e.message(),
                         line);
    } catch (const minic::SemanticError& e) {
      throw HarnessError(HarnessErrorKind::UnparseableSource, r.id + ": " + e.what(), line);
    }
    records.push_back(std::move(r));
  }
  if (in.bad()) throw HarnessError(HarnessErrorKind::IoError, "read failed on " + path);
  return records;
}

void write_corpus(const std::vector<CorpusRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError(HarnessErrorKind::IoError, "cannot write " + path);
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"source", r.source}, {"label", r.label}}.dump() << '\n';
  }
  if (!out) throw HarnessError(HarnessErrorKind::IoError, "write failed on " + path);
}

std::size_t div_risk_label(const minic::SourceUnit& unit) {
  bool risky = false;
  walk_unit(
      unit, [](const minic::FunctionDef&) {}, [](const minic::Stmt&) {},
      [&](const minic::Expr& e) {
        if (e.kind != minic::ExprKind::Binary) return;
        if (e.binary_op != minic::BinaryOp::Div && e.binary_op != minic::BinaryOp::Mod) return;
        if (minic::strip_parens(e.rhs()).kind == minic::ExprKind::Var) risky = true;
      });
  return risky ? 1 : 0;
}

namespace {

// Text-level sampler for one program. Loop counters are readable but never
// assignable, and every loop runs a literal number of times, so programs
// halt by construction; the interpreter check below is a second line.
//
// A program is written either compactly (compound and ++ updates, multi
// declarations, ternaries, switch) or plainly (the expanded equivalents).
// Compact style is the spurious cue: it favours label 0.
class ProgramSampler {
 public:
  ProgramSampler(std::mt19937_64& rng, bool risky, bool compact, double extra_risk)
      : rng_(rng), risky_(risky), compact_(compact), extra_risk_(extra_risk) {}

  std::string sample() {
    readable_ = {kParams, kParams + 3};
    mutable_ = {};
    out_.str("");
    out_ << "int " << kSynthEntry << "(int a, int b, int c) {\n";
    declarations();
    int stmts = uniform(2, 5);
    int risk_at = risky_ ? uniform(0, stmts - 1) : -1;
    for (int i = 0; i < stmts; ++i) statement(1, i == risk_at || (risky_ && coin(extra_risk_)));
    line(1, "return " + expr(2) + ";");
    out_ << "}\n";
    return out_.str();
  }

 private:
  static constexpr const char* kParams[] = {"a", "b", "c"};
  static constexpr const char* kLocalNames[] = {"r", "s", "t"};
  static constexpr const char* kCounterNames[] = {"i", "j", "k", "m"};

  std::mt19937_64& rng_;
  bool risky_;
  bool compact_;
  double extra_risk_;
  std::vector<std::string> readable_;
  std::vector<std::string> mutable_;
  std::ostringstream out_;
  int counters_ = 0;

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  void line(int depth, const std::string& text) { out_ << std::string(4 * depth, ' ') << text << '\n'; }

  void declarations() {
    int locals = uniform(1, 3);
    std::vector<std::string> inits;
    for (int i = 0; i < locals; ++i) inits.push_back(expr(1));
    if (compact_ && locals > 1) {
      std::string text = "int ";
      for (int i = 0; i < locals; ++i) text += std::string(i ? ", " : "") + kLocalNames[i] + " = " + inits[i];
      line(1, text + ";");
    } else {
      for (int i = 0; i < locals; ++i) line(1, std::string("int ") + kLocalNames[i] + " = " + inits[i] + ";");
    }
    for (int i = 0; i < locals; ++i) {
      readable_.push_back(kLocalNames[i]);
      mutable_.push_back(kLocalNames[i]);
    }
  }

  std::string atom() {
    if (coin(0.65)) return pick(readable_);
    return std::to_string(uniform(1, 9));
  }

  // Never divides by a bare variable.
  std::string expr(int budget) {
    if (budget <= 0 || coin(0.3)) return atom();
    switch (uniform(0, 5)) {
      case 0: return expr(budget - 1) + " + " + expr(budget - 1);
      case 1: return expr(budget - 1) + " - " + atom();
      case 2: return atom() + " * " + atom();
      case 3: return atom() + (coin(0.5) ? " / " : " % ") + std::to_string(uniform(2, 9));
      case 4: return "(" + expr(budget - 1) + ") * " + std::to_string(uniform(2, 5));
      default: return atom() + " / (" + pick(readable_) + " * " + pick(readable_) + " + 1)";
    }
  }

  std::string condition() {
    static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
    return atom() + " " + ops[uniform(0, 5)] + " " + atom();
  }

  std::string risky_expr() {
    // Loop counters start at 0, so they never serve as divisors.
    std::vector<std::string> divisors(kParams, kParams + 3);
    divisors.insert(divisors.end(), mutable_.begin(), mutable_.end());
    std::string num = coin(0.5) ? atom() : "(" + expr(1) + ")";
    return num + (coin(0.7) ? " / " : " % ") + pick(divisors);
  }

  std::string value(bool risk) { return risk ? risky_expr() : expr(2); }

  // `target op= e` compactly, `target = target op (e)` plainly.
  std::string update(const std::string& target, bool risk) {
    static const char* ops[] = {"+", "-", "*"};
    std::string op = ops[uniform(0, 2)];
    std::string e = risk ? risky_expr() : expr(1);
    if (compact_) return target + " " + op + "= " + e + ";";
    return target + " = " + target + " " + op + " (" + e + ");";
  }

  std::string step(const std::string& target, bool up) {
    if (compact_) return target + (up ? "++" : "--");
    return target + " = " + target + (up ? " + 1" : " - 1");
  }

  void simple(int depth, bool risk) {
    std::string target = pick(mutable_);
    switch (uniform(0, 3)) {
      case 0:
      case 1: line(depth, target + " = " + value(risk) + ";"); return;
      case 2: line(depth, update(target, risk)); return;
      default:
        line(depth, step(target, coin(0.5)) + ";");
        if (risk) line(depth, target + " = " + risky_expr() + ";");
        return;
    }
  }

  void block_body(int depth, bool risk) {
    std::size_t scope = readable_.size();
    int n = uniform(1, 3);
    int at = risk ? uniform(0, n - 1) : -1;
    for (int i = 0; i < n; ++i) {
      if (depth < 3 && coin(0.2)) {
        statement(depth, i == at);
      } else {
        simple(depth, i == at);
      }
    }
    readable_.resize(scope);
  }

  void loop(int depth, bool risk) {
    if (counters_ == 4) {
      simple(depth, risk);
      return;
    }
    std::string counter = kCounterNames[counters_++];
    bool use_while = coin(0.5);
    std::string bound = std::to_string(uniform(2, 6));
    std::string guard = counter + " < " + bound;
    if (use_while) {
      line(depth, "int " + counter + " = 0;");
      line(depth, "while (" + guard + ") {");
    } else {
      line(depth, "for (int " + counter + " = 0; " + guard + "; " + step(counter, true) + ") {");
    }
    readable_.push_back(counter);
    block_body(depth + 1, risk);
    if (use_while) line(depth + 1, step(counter, true) + ";");
    line(depth, "}");
    if (!use_while) readable_.pop_back();
  }

  void branch(int depth, bool risk) {
    line(depth, "if (" + condition() + ") {");
    block_body(depth + 1, risk);
    if (coin(0.5)) {
      line(depth, "} else {");
      block_body(depth + 1, false);
    }
    line(depth, "}");
  }

  // Ternary compactly, if/else plainly.
  void select(int depth, bool risk) {
    std::string target = pick(mutable_);
    std::string cond = condition();
    std::string then_value = risk ? risky_expr() : expr(1);
    std::string else_value = expr(1);
    if (compact_) {
      line(depth, target + " = " + cond + " ? " + then_value + " : " + else_value + ";");
      return;
    }
    line(depth, "if (" + cond + ") {");
    line(depth + 1, target + " = " + then_value + ";");
    line(depth, "} else {");
    line(depth + 1, target + " = " + else_value + ";");
    line(depth, "}");
  }

  // switch compactly, an if chain plainly.
  void dispatch(int depth, bool risk) {
    std::string subject = pick(readable_) + " % 3";
    int cases = uniform(1, 2);
    int at = risk ? uniform(0, cases) : -1;
    if (compact_) {
      line(depth, "switch (" + subject + ") {");
      for (int i = 0; i <= cases; ++i) {
        line(depth + 1, i < cases ? "case " + std::to_string(i) + ":" : "default:");
        simple(depth + 2, i == at);
        line(depth + 2, "break;");
      }
      line(depth, "}");
      return;
    }
    for (int i = 0; i < cases; ++i) {
      line(depth + i, "if (" + subject + " == " + std::to_string(i) + ") {");
      simple(depth + i + 1, i == at);
      line(depth + i, "} else {");
    }
    simple(depth + cases, cases == at);
    for (int i = cases - 1; i >= 0; --i) line(depth + i, "}");
  }

  void statement(int depth, bool risk) {
    int kind = uniform(0, 9);
    if (depth >= 3 && kind >= 3) kind = 0;
    switch (kind) {
      case 0:
      case 1:
      case 2: simple(depth, risk); return;
      case 3:
      case 4:
      case 5: loop(depth, risk); return;
      case 6:
      case 7: branch(depth, risk); return;
      case 8: select(depth, risk); return;
      default: dispatch(depth, risk); return;
    }
  }
};

constexpr std::size_t kRetriesPerProgram = 50;

bool halts_on_probes(const minic::SourceUnit& unit, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> arg(-20, 20);
  for (int probe = 0; probe < 4; ++probe) {
    std::vector<minic::Value> args;
    for (int i = 0; i < 3; ++i) args.push_back(minic::Value::of_int(arg(rng)));
    auto outcome = minic::interpret(unit, kSynthEntry, args);
    if (!outcome.ok() && outcome.fault().kind != minic::FaultKind::DivByZero) return false;
  }
  return true;
}

}  // namespace

std::vector<CorpusRecord> synth_corpus(std::size_t n, std::uint64_t gen_seed, const SynthOptions& options) {
  if (options.rule != "div-risk") throw HarnessError(HarnessErrorKind::InvalidConfig, "unknown rule " + options.rule);
  for (double rate : {options.compact_safe, options.compact_risky, options.extra_risk}) {
    if (!(rate >= 0 && rate <= 1)) throw HarnessError(HarnessErrorKind::InvalidConfig, "synth rates must be in [0,1]");
  }
  std::mt19937_64 rng(gen_seed);
  std::vector<std::pair<std::string, std::size_t>> programs;
  // Exact balance; odd n gives the extra program to label 0.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t want = i < n / 2 ? 1 : 0;
    bool done = false;
    for (std::size_t attempt = 0; attempt < kRetriesPerProgram && !done; ++attempt) {
      double compact_rate = want == 0 ? options.compact_safe : options.compact_risky;
      bool compact = std::uniform_real_distribution<double>(0, 1)(rng) < compact_rate;
      ProgramSampler sampler(rng, want == 1, compact, options.extra_risk);
      std::string source = sampler.sample();
      try {
        minic::SourceUnit unit = minic::parse(source);
        minic::resolve_scopes(unit);
        if (div_risk_label(unit) != want || !halts_on_probes(unit, rng)) continue;
      } catch (const std::exception&) {
        continue;
      }
      programs.emplace_back(std::move(source), want);
      done = true;
    }
    if (!done) {
      throw HarnessError(HarnessErrorKind::GenerationExhausted,
                         "no valid label-" + std::to_string(want) + " program after " +
                             std::to_string(kRetriesPerProgram) + " attempts");
    }
  }
  std::shuffle(programs.begin(), programs.end(), rng);
  std::vector<CorpusRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < programs.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    records.push_back({id, std::move(programs[i].first), programs[i].second});
  }
  return records;
}

}  // namespace scope_refine::harness
