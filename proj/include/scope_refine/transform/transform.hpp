#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::transform {

using minic::NodeId;
using minic::SourceUnit;

// Numbering is part of the CLI and report formats.
enum class OperatorId : std::uint8_t {
  VarRename = 1,
  ForToWhile = 2,
  WhileToFor = 3,
  CompoundAssignExpand = 4,
  IncDecExpand = 5,
  IfBranchSwap = 6,
  RelationalMirror = 7,
  CommutativeSwap = 8,
  DeclSplit = 9,
  DeadStoreInsert = 10,
  ParenWrap = 11,
  TernaryToIf = 12,
  SwitchToIfChain = 13,
  BoolCondNormalize = 14,
  IndependentStmtSwap = 15,
};

inline constexpr std::size_t kOperatorCount = 15;

const std::array<OperatorId, kOperatorCount>& all_operators();
std::string_view to_string(OperatorId op);
// Accepts 1..15; nullopt otherwise.
std::optional<OperatorId> operator_from_number(int n);
std::optional<OperatorId> operator_from_name(std::string_view name);

// Anchor of one rewrite. `index` selects a declarator or parameter for
// VarRename and is 0 for every other operator.
struct Site {
  NodeId node_id = 0;
  std::size_t index = 0;

  friend bool operator==(const Site& a, const Site& b) {
    return a.node_id == b.node_id && a.index == b.index;
  }
  friend bool operator<(const Site& a, const Site& b) {
    return a.node_id != b.node_id ? a.node_id < b.node_id : a.index < b.index;
  }
};

struct Applied {
  SourceUnit unit;
  Site site;
};

struct Inapplicable {
  std::string reason;
};

using TransformOutcome = std::variant<Applied, Inapplicable>;

// Sites in NodeId order. Empty when the unit does not resolve.
std::vector<Site> applicable_sites(const SourceUnit& unit, OperatorId op);

// Operators with at least one site, in numeric order.
std::vector<OperatorId> applicable_operators(const SourceUnit& unit);

// Applied iff `site` is one of applicable_sites(unit, op). The result is
// renumbered, resolves, prints differently from the input and computes the
// same function. `seed` only influences fresh names.
TransformOutcome apply_op(const SourceUnit& unit, OperatorId op, const Site& site,
                          std::uint64_t seed);

inline constexpr std::size_t kMaxGenomeLen = 8;

// `rank` indexes applicable_sites at the time the edit is applied; an edit
// whose rank is out of range is skipped.
struct Edit {
  OperatorId op = OperatorId::ParenWrap;
  std::uint32_t rank = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const Edit& a, const Edit& b) {
    return a.op == b.op && a.rank == b.rank && a.seed == b.seed;
  }
};

struct TransformGenome {
  std::vector<Edit> edits;

  friend bool operator==(const TransformGenome& a, const TransformGenome& b) {
    return a.edits == b.edits;
  }
};

struct GenomeResult {
  SourceUnit unit;
  std::size_t applied_count = 0;
};

GenomeResult apply_genome(const SourceUnit& unit, const TransformGenome& genome);

// Draws `len` edits against the evolving unit: each edit picks an operator
// uniformly among those applicable at that point and a rank uniformly among
// its sites. Stops early (possibly empty) once nothing applies.
TransformGenome random_genome(const SourceUnit& unit, std::size_t len, std::uint64_t rng_seed);

std::string to_string(const TransformGenome& genome);

}  // namespace scope_refine::transform
