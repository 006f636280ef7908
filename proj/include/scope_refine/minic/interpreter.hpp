#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::minic {

struct Value {
  Type type = Type::Int;
  std::int64_t i = 0;
  bool b = false;

  static Value of_int(std::int64_t v) { return Value{Type::Int, v, false}; }
  static Value of_bool(bool v) { return Value{Type::Bool, 0, v}; }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.type != b.type) return false;
    return a.type == Type::Int ? a.i == b.i : a.b == b.b;
  }
};

std::string to_string(const Value& v);

enum class FaultKind { FuelExhausted, DivByZero, TypeFault, UnboundVar };

std::string_view to_string(FaultKind kind);

struct RuntimeFault {
  FaultKind kind = FaultKind::TypeFault;
  std::string detail;

  friend bool operator==(const RuntimeFault& a, const RuntimeFault& b) { return a.kind == b.kind; }
};

struct RunOutcome {
  std::variant<Value, RuntimeFault> result;
  std::uint64_t steps_used = 0;

  bool ok() const { return std::holds_alternative<Value>(result); }
  const Value& value() const { return std::get<Value>(result); }
  const RuntimeFault& fault() const { return std::get<RuntimeFault>(result); }
};

// Same value, or same fault kind. Step counts are not compared.
bool same_result(const RunOutcome& a, const RunOutcome& b);

std::string to_string(const RunOutcome& outcome);

// Precondition violation: unknown entry, or arguments not matching the entry
// signature.
class InterpretError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::uint64_t kDefaultFuel = 100000;

// Nested calls beyond this depth end the run as FuelExhausted.
inline constexpr std::size_t kMaxCallDepth = 1000;

// Deterministic evaluation. One step is charged per statement execution, per
// expression-node evaluation and per loop iteration. Faults are reported in
// the outcome; this never throws for a well-formed call.
RunOutcome interpret(const SourceUnit& unit, const std::string& entry,
                     const std::vector<Value>& args, std::uint64_t fuel = kDefaultFuel);

}  // namespace scope_refine::minic
