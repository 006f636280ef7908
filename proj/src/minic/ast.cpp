#include "scope_refine/minic/ast.hpp"

#include <algorithm>

namespace scope_refine::minic {

std::string_view to_string(Type t) { return t == Type::Int ? "int" : "bool"; }

std::string_view to_string(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "!"; }

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 6;
  }
  return 0;
}

bool is_relational(BinaryOp op) {
  return op == BinaryOp::Lt || op == BinaryOp::Le || op == BinaryOp::Gt || op == BinaryOp::Ge;
}

bool is_equality(BinaryOp op) { return op == BinaryOp::Eq || op == BinaryOp::Ne; }

bool is_arithmetic(BinaryOp op) { return precedence(op) >= 5; }

Expr Expr::int_lit(std::int64_t v) {
  Expr e;
  e.kind = ExprKind::IntLit;
  e.int_value = v;
  return e;
}

Expr Expr::bool_lit(bool v) {
  Expr e;
  e.kind = ExprKind::BoolLit;
  e.bool_value = v;
  return e;
}

Expr Expr::var(std::string name) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(name);
  return e;
}

Expr Expr::unary(UnaryOp op, Expr operand) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.unary_op = op;
  switch (operand.kind) {
    case ExprKind::Binary:
    case ExprKind::Ternary: operand = paren(std::move(operand)); break;
    default: break;
  }
  e.operands.push_back(std::move(operand));
  return e;
}

Expr Expr::paren(Expr inner) {
  Expr e;
  e.kind = ExprKind::Paren;
  e.operands.push_back(std::move(inner));
  return e;
}

Expr Expr::ternary(Expr cond, Expr then_value, Expr else_value) {
  Expr e;
  e.kind = ExprKind::Ternary;
  // The condition binds at || level; nested ternaries elsewhere parse fine
  // only in the else position.
  if (cond.kind == ExprKind::Ternary) cond = paren(std::move(cond));
  e.operands.push_back(std::move(cond));
  e.operands.push_back(std::move(then_value));
  e.operands.push_back(std::move(else_value));
  return e;
}

Expr Expr::call(std::string callee, std::vector<Expr> args) {
  Expr e;
  e.kind = ExprKind::Call;
  e.name = std::move(callee);
  e.operands = std::move(args);
  return e;
}

Expr Expr::binary_raw(BinaryOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.binary_op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  const int p = precedence(op);
  auto needs_paren = [p](const Expr& operand, bool right_side) {
    if (operand.kind == ExprKind::Ternary) return true;
    if (operand.kind != ExprKind::Binary) return false;
    const int q = precedence(operand.binary_op);
    return right_side ? q <= p : q < p;
  };
  if (needs_paren(lhs, false)) lhs = paren(std::move(lhs));
  if (needs_paren(rhs, true)) rhs = paren(std::move(rhs));
  return binary_raw(op, std::move(lhs), std::move(rhs));
}

const Expr& strip_parens(const Expr& e) {
  const Expr* cur = &e;
  while (cur->kind == ExprKind::Paren) cur = &cur->operands[0];
  return *cur;
}

Stmt Stmt::block(std::vector<Stmt> stmts) {
  Stmt s;
  s.kind = StmtKind::Block;
  s.body = std::move(stmts);
  return s;
}

Stmt Stmt::decl(Type type, std::vector<Declarator> declarators) {
  Stmt s;
  s.kind = StmtKind::Decl;
  s.decl_type = type;
  s.declarators = std::move(declarators);
  return s;
}

Stmt Stmt::assign(std::string target, Expr value) {
  Stmt s;
  s.kind = StmtKind::Assign;
  s.target = std::move(target);
  s.expr = std::move(value);
  return s;
}

Stmt Stmt::compound_assign(std::string target, BinaryOp op, Expr value) {
  Stmt s;
  s.kind = StmtKind::CompoundAssign;
  s.target = std::move(target);
  s.compound_op = op;
  s.expr = std::move(value);
  return s;
}

Stmt Stmt::inc_dec(std::string target, bool increment) {
  Stmt s;
  s.kind = StmtKind::IncDec;
  s.target = std::move(target);
  s.increment = increment;
  return s;
}

Stmt Stmt::if_else(Expr cond, Stmt then_block, std::optional<Stmt> else_block) {
  Stmt s;
  s.kind = StmtKind::If;
  s.expr = std::move(cond);
  s.body.push_back(std::move(then_block));
  if (else_block) s.body.push_back(std::move(*else_block));
  return s;
}

Stmt Stmt::while_loop(Expr cond, Stmt body_block) {
  Stmt s;
  s.kind = StmtKind::While;
  s.expr = std::move(cond);
  s.body.push_back(std::move(body_block));
  return s;
}

Stmt Stmt::for_loop(std::optional<Stmt> init, std::optional<Expr> cond, std::optional<Stmt> step,
                    Stmt body_block) {
  Stmt s;
  s.kind = StmtKind::For;
  if (init) s.init.push_back(std::move(*init));
  s.expr = std::move(cond);
  if (step) s.step.push_back(std::move(*step));
  s.body.push_back(std::move(body_block));
  return s;
}

Stmt Stmt::switch_stmt(Expr subject, std::vector<SwitchCase> cases) {
  Stmt s;
  s.kind = StmtKind::Switch;
  s.expr = std::move(subject);
  s.cases = std::move(cases);
  return s;
}

Stmt Stmt::return_stmt(Expr value) {
  Stmt s;
  s.kind = StmtKind::Return;
  s.expr = std::move(value);
  return s;
}

Stmt Stmt::expr_stmt(Expr value) {
  Stmt s;
  s.kind = StmtKind::ExprStmt;
  s.expr = std::move(value);
  return s;
}

Stmt Stmt::break_stmt() {
  Stmt s;
  s.kind = StmtKind::Break;
  return s;
}

Stmt Stmt::continue_stmt() {
  Stmt s;
  s.kind = StmtKind::Continue;
  return s;
}

const FunctionDef* SourceUnit::find_function(std::string_view name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

NodeId renumber(SourceUnit& unit) {
  NodeId next = 1;
  walk_unit(
      unit, [&](FunctionDef& f) { f.id = next++; }, [&](Stmt& s) { s.id = next++; },
      [&](Expr& e) { e.id = next++; });
  return next - 1;
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.operands.size() != b.operands.size()) return false;
  switch (a.kind) {
    case ExprKind::IntLit:
      if (a.int_value != b.int_value) return false;
      break;
    case ExprKind::BoolLit:
      if (a.bool_value != b.bool_value) return false;
      break;
    case ExprKind::Var:
    case ExprKind::Call:
      if (a.name != b.name) return false;
      break;
    case ExprKind::Unary:
      if (a.unary_op != b.unary_op) return false;
      break;
    case ExprKind::Binary:
      if (a.binary_op != b.binary_op) return false;
      break;
    case ExprKind::Ternary:
    case ExprKind::Paren: break;
  }
  for (std::size_t i = 0; i < a.operands.size(); ++i) {
    if (!same_structure(a.operands[i], b.operands[i])) return false;
  }
  return true;
}

namespace {

bool same_opt(const std::optional<Expr>& a, const std::optional<Expr>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_structure(*a, *b);
}

bool same_list(const std::vector<Stmt>& a, const std::vector<Stmt>& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(),
                    [](const Stmt& x, const Stmt& y) { return same_structure(x, y); });
}

}  // namespace

bool same_structure(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case StmtKind::Decl:
      if (a.decl_type != b.decl_type || a.declarators.size() != b.declarators.size()) return false;
      for (std::size_t i = 0; i < a.declarators.size(); ++i) {
        if (a.declarators[i].name != b.declarators[i].name) return false;
        if (!same_opt(a.declarators[i].init, b.declarators[i].init)) return false;
      }
      return true;
    case StmtKind::Assign: return a.target == b.target && same_opt(a.expr, b.expr);
    case StmtKind::CompoundAssign:
      return a.target == b.target && a.compound_op == b.compound_op && same_opt(a.expr, b.expr);
    case StmtKind::IncDec: return a.target == b.target && a.increment == b.increment;
    case StmtKind::Switch:
      if (!same_opt(a.expr, b.expr) || a.cases.size() != b.cases.size()) return false;
      for (std::size_t i = 0; i < a.cases.size(); ++i) {
        if (a.cases[i].label != b.cases[i].label) return false;
        if (!same_list(a.cases[i].body, b.cases[i].body)) return false;
      }
      return true;
    default:
      return same_opt(a.expr, b.expr) && same_list(a.body, b.body) && same_list(a.init, b.init) &&
             same_list(a.step, b.step);
  }
}

bool same_structure(const SourceUnit& a, const SourceUnit& b) {
  if (a.functions.size() != b.functions.size()) return false;
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    const auto& fa = a.functions[i];
    const auto& fb = b.functions[i];
    if (fa.name != fb.name || fa.return_type != fb.return_type ||
        fa.params.size() != fb.params.size()) {
      return false;
    }
    for (std::size_t p = 0; p < fa.params.size(); ++p) {
      if (fa.params[p].type != fb.params[p].type || fa.params[p].name != fb.params[p].name) {
        return false;
      }
    }
    if (!same_structure(fa.body, fb.body)) return false;
  }
  return true;
}

std::optional<std::string> default_entry(const SourceUnit& unit) {
  if (unit.find_function("main_entry")) return std::string("main_entry");
  if (unit.functions.size() == 1) return unit.functions.front().name;
  return std::nullopt;
}

}  // namespace scope_refine::minic
