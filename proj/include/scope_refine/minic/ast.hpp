#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scope_refine::minic {

using NodeId = std::uint32_t;

enum class Type { Int, Bool };

enum class UnaryOp { Neg, Not };

enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

enum class ExprKind { IntLit, BoolLit, Var, Unary, Binary, Ternary, Call, Paren };

enum class StmtKind {
  Decl,
  Assign,
  CompoundAssign,
  IncDec,
  If,
  While,
  For,
  Switch,
  Return,
  Block,
  ExprStmt,
  Break,
  Continue,
};

std::string_view to_string(Type t);
std::string_view to_string(UnaryOp op);
std::string_view to_string(BinaryOp op);

// Binding strength used by the parser and by expression builders:
// || = 1, && = 2, ==/!= = 3, relational = 4, additive = 5, multiplicative = 6.
int precedence(BinaryOp op);
bool is_relational(BinaryOp op);
bool is_equality(BinaryOp op);
bool is_arithmetic(BinaryOp op);

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  NodeId id = 0;
  std::int64_t int_value = 0;
  bool bool_value = false;
  std::string name;  // Var and Call
  UnaryOp unary_op = UnaryOp::Neg;
  BinaryOp binary_op = BinaryOp::Add;
  // Unary/Paren: [operand]; Binary: [lhs, rhs]; Ternary: [cond, then, else];
  // Call: arguments.
  std::vector<Expr> operands;

  static Expr int_lit(std::int64_t v);
  static Expr bool_lit(bool v);
  static Expr var(std::string name);
  static Expr unary(UnaryOp op, Expr operand);
  static Expr paren(Expr inner);
  static Expr ternary(Expr cond, Expr then_value, Expr else_value);
  static Expr call(std::string callee, std::vector<Expr> args);
  // Raw binary node; callers are responsible for parenthesization.
  static Expr binary_raw(BinaryOp op, Expr lhs, Expr rhs);
  // Binary node with Paren inserted wherever the printed form would otherwise
  // re-associate differently.
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  const Expr& lhs() const { return operands[0]; }
  const Expr& rhs() const { return operands[1]; }
};

// Strips any number of enclosing Paren nodes.
const Expr& strip_parens(const Expr& e);

struct Declarator {
  std::string name;
  std::optional<Expr> init;
};

struct Stmt;

struct SwitchCase {
  std::optional<std::int64_t> label;  // nullopt = default
  std::vector<Stmt> body;
};

struct Stmt {
  StmtKind kind = StmtKind::Block;
  NodeId id = 0;

  // Decl
  Type decl_type = Type::Int;
  std::vector<Declarator> declarators;

  // Assign / CompoundAssign / IncDec
  std::string target;
  BinaryOp compound_op = BinaryOp::Add;
  bool increment = true;

  // Assigned value, condition, returned value, evaluated expression, or
  // switch subject. For loops use it as the (optional) condition.
  std::optional<Expr> expr;

  // Block: statements. If: [then-block] or [then-block, else-block].
  // While/For: [loop block].
  std::vector<Stmt> body;

  // For clauses, zero or one statement each.
  std::vector<Stmt> init;
  std::vector<Stmt> step;

  std::vector<SwitchCase> cases;

  static Stmt block(std::vector<Stmt> stmts);
  static Stmt decl(Type type, std::vector<Declarator> declarators);
  static Stmt assign(std::string target, Expr value);
  static Stmt compound_assign(std::string target, BinaryOp op, Expr value);
  static Stmt inc_dec(std::string target, bool increment);
  static Stmt if_else(Expr cond, Stmt then_block, std::optional<Stmt> else_block);
  static Stmt while_loop(Expr cond, Stmt body_block);
  static Stmt for_loop(std::optional<Stmt> init, std::optional<Expr> cond,
                       std::optional<Stmt> step, Stmt body_block);
  static Stmt switch_stmt(Expr subject, std::vector<SwitchCase> cases);
  static Stmt return_stmt(Expr value);
  static Stmt expr_stmt(Expr value);
  static Stmt break_stmt();
  static Stmt continue_stmt();

  const Stmt& then_block() const { return body[0]; }
  bool has_else() const { return body.size() > 1; }
  const Stmt& else_block() const { return body[1]; }
  const Stmt& loop_body() const { return body[0]; }
};

struct Param {
  Type type = Type::Int;
  std::string name;
};

struct FunctionDef {
  NodeId id = 0;
  Type return_type = Type::Int;
  std::string name;
  std::vector<Param> params;
  Stmt body;  // always a Block
};

struct SourceUnit {
  std::vector<FunctionDef> functions;

  const FunctionDef* find_function(std::string_view name) const;
};

// Assigns monotone preorder NodeIds starting at 1 and returns the count.
NodeId renumber(SourceUnit& unit);

// Structural equality ignoring NodeIds.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const Stmt& a, const Stmt& b);
bool same_structure(const SourceUnit& a, const SourceUnit& b);

// Name of the function `interpret` uses when no entry is designated:
// `main_entry` if present, otherwise the only function of a one-function unit.
std::optional<std::string> default_entry(const SourceUnit& unit);

// Preorder traversal over every statement and expression of a unit. Works on
// const and non-const units alike.
template <class E, class OnExpr>
void walk_expr(E& e, OnExpr&& on_expr) {
  on_expr(e);
  for (auto& child : e.operands) walk_expr(child, on_expr);
}

template <class S, class OnStmt, class OnExpr>
void walk_stmt(S& s, OnStmt&& on_stmt, OnExpr&& on_expr) {
  on_stmt(s);
  for (auto& d : s.declarators) {
    if (d.init) walk_expr(*d.init, on_expr);
  }
  if (s.kind == StmtKind::For) {
    for (auto& i : s.init) walk_stmt(i, on_stmt, on_expr);
    if (s.expr) walk_expr(*s.expr, on_expr);
    for (auto& st : s.step) walk_stmt(st, on_stmt, on_expr);
  } else if (s.expr) {
    walk_expr(*s.expr, on_expr);
  }
  for (auto& child : s.body) walk_stmt(child, on_stmt, on_expr);
  for (auto& c : s.cases) {
    for (auto& child : c.body) walk_stmt(child, on_stmt, on_expr);
  }
}

template <class U, class OnFunction, class OnStmt, class OnExpr>
void walk_unit(U& unit, OnFunction&& on_function, OnStmt&& on_stmt, OnExpr&& on_expr) {
  for (auto& f : unit.functions) {
    on_function(f);
    walk_stmt(f.body, on_stmt, on_expr);
  }
}

}  // namespace scope_refine::minic
