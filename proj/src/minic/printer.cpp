#include "scope_refine/minic/printer.hpp"

namespace scope_refine::minic {

namespace {

void indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 4, ' '); }

void emit_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit: out += std::to_string(e.int_value); break;
    case ExprKind::BoolLit: out += e.bool_value ? "true" : "false"; break;
    case ExprKind::Var: out += e.name; break;
    case ExprKind::Unary: {
      out += to_string(e.unary_op);
      std::string operand;
      emit_expr(operand, e.operands[0]);
      // "- -x" must not collapse into the decrement token.
      if (e.unary_op == UnaryOp::Neg && !operand.empty() && operand[0] == '-') out += ' ';
      out += operand;
      break;
    }
    case ExprKind::Binary:
      emit_expr(out, e.operands[0]);
      out += ' ';
      out += to_string(e.binary_op);
      out += ' ';
      emit_expr(out, e.operands[1]);
      break;
    case ExprKind::Ternary:
      emit_expr(out, e.operands[0]);
      out += " ? ";
      emit_expr(out, e.operands[1]);
      out += " : ";
      emit_expr(out, e.operands[2]);
      break;
    case ExprKind::Call:
      out += e.name;
      out += '(';
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i > 0) out += ", ";
        emit_expr(out, e.operands[i]);
      }
      out += ')';
      break;
    case ExprKind::Paren:
      out += '(';
      emit_expr(out, e.operands[0]);
      out += ')';
      break;
  }
}

// Single-line forms shared by statements and for-clauses (no semicolon).
void emit_simple(std::string& out, const Stmt& s) {
  switch (s.kind) {
    case StmtKind::Decl:
      out += to_string(s.decl_type);
      out += ' ';
      for (std::size_t i = 0; i < s.declarators.size(); ++i) {
        if (i > 0) out += ", ";
        out += s.declarators[i].name;
        if (s.declarators[i].init) {
          out += " = ";
          emit_expr(out, *s.declarators[i].init);
        }
      }
      break;
    case StmtKind::Assign:
      out += s.target + " = ";
      emit_expr(out, *s.expr);
      break;
    case StmtKind::CompoundAssign:
      out += s.target + ' ';
      out += to_string(s.compound_op);
      out += "= ";
      emit_expr(out, *s.expr);
      break;
    case StmtKind::IncDec: out += s.target + (s.increment ? "++" : "--"); break;
    case StmtKind::ExprStmt: emit_expr(out, *s.expr); break;
    default: break;
  }
}

void emit_stmt(std::string& out, const Stmt& s, int depth);

void emit_block_contents(std::string& out, const std::vector<Stmt>& stmts, int depth) {
  for (const auto& st : stmts) emit_stmt(out, st, depth);
}

// Emits "{\n ... }" without leading indentation or trailing newline.
void emit_braced(std::string& out, const Stmt& block, int depth) {
  out += "{\n";
  emit_block_contents(out, block.body, depth + 1);
  indent(out, depth);
  out += '}';
}

void emit_if_tail(std::string& out, const Stmt& s, int depth) {
  out += "if (";
  emit_expr(out, *s.expr);
  out += ") ";
  emit_braced(out, s.then_block(), depth);
  if (s.has_else()) {
    const Stmt& else_block = s.else_block();
    if (else_block.body.size() == 1 && else_block.body[0].kind == StmtKind::If) {
      out += " else ";
      emit_if_tail(out, else_block.body[0], depth);
      return;
    }
    out += " else ";
    emit_braced(out, else_block, depth);
  }
}

void emit_stmt(std::string& out, const Stmt& s, int depth) {
  indent(out, depth);
  switch (s.kind) {
    case StmtKind::Decl:
    case StmtKind::Assign:
    case StmtKind::CompoundAssign:
    case StmtKind::IncDec:
    case StmtKind::ExprStmt:
      emit_simple(out, s);
      out += ";\n";
      break;
    case StmtKind::Return:
      out += "return ";
      emit_expr(out, *s.expr);
      out += ";\n";
      break;
    case StmtKind::Break: out += "break;\n"; break;
    case StmtKind::Continue: out += "continue;\n"; break;
    case StmtKind::Block:
      emit_braced(out, s, depth);
      out += '\n';
      break;
    case StmtKind::If:
      emit_if_tail(out, s, depth);
      out += '\n';
      break;
    case StmtKind::While:
      out += "while (";
      emit_expr(out, *s.expr);
      out += ") ";
      emit_braced(out, s.loop_body(), depth);
      out += '\n';
      break;
    case StmtKind::For:
      out += "for (";
      if (!s.init.empty()) emit_simple(out, s.init[0]);
      out += ';';
      if (s.expr) {
        out += ' ';
        emit_expr(out, *s.expr);
      }
      out += ';';
      if (!s.step.empty()) {
        out += ' ';
        emit_simple(out, s.step[0]);
      }
      out += ") ";
      emit_braced(out, s.loop_body(), depth);
      out += '\n';
      break;
    case StmtKind::Switch:
      out += "switch (";
      emit_expr(out, *s.expr);
      out += ") {\n";
      for (const auto& c : s.cases) {
        indent(out, depth + 1);
        if (c.label) {
          out += "case " + std::to_string(*c.label) + ":\n";
        } else {
          out += "default:\n";
        }
        emit_block_contents(out, c.body, depth + 2);
      }
      indent(out, depth);
      out += "}\n";
      break;
  }
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  emit_expr(out, e);
  return out;
}

std::string print_stmt(const Stmt& s, int depth) {
  std::string out;
  emit_stmt(out, s, depth);
  return out;
}

std::string print_source(const SourceUnit& unit) {
  std::string out;
  for (std::size_t i = 0; i < unit.functions.size(); ++i) {
    const auto& f = unit.functions[i];
    if (i > 0) out += '\n';
    out += to_string(f.return_type);
    out += ' ' + f.name + '(';
    for (std::size_t p = 0; p < f.params.size(); ++p) {
      if (p > 0) out += ", ";
      out += to_string(f.params[p].type);
      out += ' ' + f.params[p].name;
    }
    out += ") ";
    emit_braced(out, f.body, 0);
    out += '\n';
  }
  return out;
}

}  // namespace scope_refine::minic
