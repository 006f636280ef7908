#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::harness {

enum class HarnessErrorKind {
  IoError,
  MalformedLine,
  UnparseableSource,
  GenerationExhausted,
  SingleClass,
  EmptyDenominator,
  LengthMismatch,
  VersionMismatch,
  InvalidConfig,
};

std::string_view to_string(HarnessErrorKind kind);

class HarnessError : public std::runtime_error {
 public:
  HarnessError(HarnessErrorKind kind, const std::string& detail, std::optional<std::size_t> line = std::nullopt);
  HarnessErrorKind kind() const { return kind_; }
  // 1-based line for MalformedLine and UnparseableSource.
  std::optional<std::size_t> line() const { return line_; }

 private:
  HarnessErrorKind kind_;
  std::optional<std::size_t> line_;
};

struct CorpusRecord {
  std::string id;
  std::string source;
  std::size_t label = 0;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

// JSONL, one {"id","source","label"} object per line; blank lines are
// skipped. Duplicate ids are malformed lines. Unparseable or unresolvable
// sources raise UnparseableSource naming the id and the parser's line:col.
std::vector<CorpusRecord> load_corpus(const std::string& path);
void write_corpus(const std::vector<CorpusRecord>& records, const std::string& path);

// Label 1 iff some `/` or `%` has a plain variable (parentheses aside) as its
// divisor.
std::size_t div_risk_label(const minic::SourceUnit& unit);

// Entry point of every generated program.
inline constexpr const char* kSynthEntry = "main_entry";

// Seeded sampler of three-parameter MiniC programs, exactly balanced between
// the two div-risk classes. Each program is written either compactly
// (compound assignments, ++, multi-declarations, ternaries, switch) or in
// the expanded equivalents; compact style is a spurious cue, common in safe
// programs and rare in risky ones. Every program resolves and halts within
// the default fuel on probe arguments. Throws GenerationExhausted if retries
// run out, and InvalidConfig for an unknown rule or a rate outside [0,1].
struct SynthOptions {
  std::string rule = "div-risk";
  double compact_safe = 0.6;   // P(compact | label 0)
  double compact_risky = 0.1;  // P(compact | label 1)
  double extra_risk = 0.5;     // P(another top-level statement of a risky program is risky)

  friend bool operator==(const SynthOptions&, const SynthOptions&) = default;
};
std::vector<CorpusRecord> synth_corpus(std::size_t n, std::uint64_t gen_seed, const SynthOptions& options = {});

}  // namespace scope_refine::harness
