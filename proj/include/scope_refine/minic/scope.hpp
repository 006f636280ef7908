#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::minic {

enum class SemanticErrorKind { UnboundVar, DuplicateDecl, CallToUnknownFunction, ArityMismatch };

class SemanticError : public std::runtime_error {
 public:
  SemanticError(SemanticErrorKind kind, std::string name, NodeId node);

  SemanticErrorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  NodeId node() const { return node_; }

 private:
  SemanticErrorKind kind_;
  std::string name_;
  NodeId node_;
};

std::string_view to_string(SemanticErrorKind kind);

struct Binding {
  std::string name;
  Type type = Type::Int;
  NodeId decl_node = 0;  // Decl statement, or FunctionDef for parameters
  std::size_t index = 0;  // declarator or parameter index
  bool is_param = false;
};

// Names read and written anywhere inside a statement, plus the control
// constructs it contains.
struct Effects {
  std::set<std::string> reads;
  std::set<std::string> writes;
  bool has_call = false;
  bool has_return = false;
  bool has_break = false;
  bool has_continue = false;
  bool has_loop = false;
  bool has_div = false;    // `/` or `%` anywhere, including compound forms
  bool may_fault = false;  // some execution of the statement could fault
};

struct Signature {
  Type return_type = Type::Int;
  std::vector<Type> params;
};

struct SymbolTable {
  std::unordered_map<NodeId, Binding> uses;     // Var expression -> declaration
  std::unordered_map<NodeId, Binding> targets;  // assignment statement -> target
  std::unordered_map<NodeId, Effects> effects;  // statement -> effects
  std::map<std::string, Signature> functions;

  const Effects& effects_of(const Stmt& s) const { return effects.at(s.id); }

  // Static type of an expression; nullopt when evaluation could raise a
  // TypeFault.
  std::optional<Type> static_type(const Expr& e) const;

  // True unless the expression provably evaluates without any runtime fault:
  // well-typed, no division or modulo, no calls.
  bool may_fault(const Expr& e) const;
};

// Binds every variable use to its declaration and computes per-statement
// effects. Throws SemanticError.
SymbolTable resolve_scopes(const SourceUnit& unit);

// Variable names referenced by an expression.
void collect_reads(const Expr& e, std::set<std::string>& out);
bool contains_call(const Expr& e);
bool contains_div(const Expr& e);

}  // namespace scope_refine::minic
