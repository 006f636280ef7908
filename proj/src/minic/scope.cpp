#include "scope_refine/minic/scope.hpp"

namespace scope_refine::minic {

namespace {

std::string describe(SemanticErrorKind kind, const std::string& name) {
  return std::string(to_string(kind)) + ": " + name;
}

class Resolver {
 public:
  explicit Resolver(SymbolTable& table) : table_(table) {}

  void run(const SourceUnit& unit) {
    for (const auto& f : unit.functions) {
      if (table_.functions.count(f.name)) {
        throw SemanticError(SemanticErrorKind::DuplicateDecl, f.name, f.id);
      }
      Signature sig;
      sig.return_type = f.return_type;
      for (const auto& p : f.params) sig.params.push_back(p.type);
      table_.functions.emplace(f.name, std::move(sig));
    }
    for (const auto& f : unit.functions) {
      return_type_ = f.return_type;
      scopes_.clear();
      scopes_.emplace_back();
      for (std::size_t i = 0; i < f.params.size(); ++i) {
        declare(Binding{f.params[i].name, f.params[i].type, f.id, i, true}, f.id);
      }
      // Parameters and the outermost body block share one scope.
      Effects e;
      for (const auto& s : f.body.body) merge(e, stmt(s));
      table_.effects[f.body.id] = e;
    }
  }

 private:
  SymbolTable& table_;
  std::vector<std::map<std::string, Binding>> scopes_;
  Type return_type_ = Type::Int;

  void declare(Binding b, NodeId node) {
    auto& scope = scopes_.back();
    if (scope.count(b.name)) throw SemanticError(SemanticErrorKind::DuplicateDecl, b.name, node);
    scope.emplace(b.name, std::move(b));
  }

  const Binding& lookup(const std::string& name, NodeId node) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return found->second;
    }
    throw SemanticError(SemanticErrorKind::UnboundVar, name, node);
  }

  static void merge(Effects& into, const Effects& from) {
    into.reads.insert(from.reads.begin(), from.reads.end());
    into.writes.insert(from.writes.begin(), from.writes.end());
    into.has_call |= from.has_call;
    into.has_return |= from.has_return;
    into.has_break |= from.has_break;
    into.has_continue |= from.has_continue;
    into.has_loop |= from.has_loop;
    into.has_div |= from.has_div;
    into.may_fault |= from.may_fault;
  }

  void expr(const Expr& e, Effects& eff) {
    walk_expr(e, [&](const Expr& node) {
      if (node.kind == ExprKind::Var) {
        table_.uses[node.id] = lookup(node.name, node.id);
        eff.reads.insert(node.name);
      } else if (node.kind == ExprKind::Call) {
        auto fn = table_.functions.find(node.name);
        if (fn == table_.functions.end()) {
          throw SemanticError(SemanticErrorKind::CallToUnknownFunction, node.name, node.id);
        }
        if (fn->second.params.size() != node.operands.size()) {
          throw SemanticError(SemanticErrorKind::ArityMismatch, node.name, node.id);
        }
        eff.has_call = true;
      } else if (node.kind == ExprKind::Binary &&
                 (node.binary_op == BinaryOp::Div || node.binary_op == BinaryOp::Mod)) {
        eff.has_div = true;
      }
    });
    if (table_.may_fault(e)) eff.may_fault = true;
  }

  // Checks the statically known type of a value against what the statement
  // requires; any mismatch means the statement can raise a TypeFault.
  void require(const Expr& e, Type t, Effects& eff) const {
    if (table_.static_type(e) != t) eff.may_fault = true;
  }

  void block(const std::vector<Stmt>& stmts, Effects& eff) {
    scopes_.emplace_back();
    for (const auto& s : stmts) merge(eff, stmt(s));
    scopes_.pop_back();
  }

  const Binding& target(const Stmt& s, Effects& eff) {
    const Binding& b = lookup(s.target, s.id);
    table_.targets[s.id] = b;
    eff.writes.insert(s.target);
    return b;
  }

  Effects stmt(const Stmt& s) {
    Effects eff;
    switch (s.kind) {
      case StmtKind::Decl:
        for (std::size_t i = 0; i < s.declarators.size(); ++i) {
          const auto& d = s.declarators[i];
          if (d.init) {
            expr(*d.init, eff);
            require(*d.init, s.decl_type, eff);
          }
          declare(Binding{d.name, s.decl_type, s.id, i, false}, s.id);
          eff.writes.insert(d.name);
        }
        break;
      case StmtKind::Assign: {
        expr(*s.expr, eff);
        const Binding& b = target(s, eff);
        require(*s.expr, b.type, eff);
        break;
      }
      case StmtKind::CompoundAssign: {
        expr(*s.expr, eff);
        const Binding& b = target(s, eff);
        eff.reads.insert(s.target);
        if (b.type != Type::Int) eff.may_fault = true;
        require(*s.expr, Type::Int, eff);
        if (s.compound_op == BinaryOp::Div || s.compound_op == BinaryOp::Mod) {
          eff.has_div = true;
          eff.may_fault = true;
        }
        break;
      }
      case StmtKind::IncDec: {
        const Binding& b = target(s, eff);
        eff.reads.insert(s.target);
        if (b.type != Type::Int) eff.may_fault = true;
        break;
      }
      case StmtKind::If:
        expr(*s.expr, eff);
        require(*s.expr, Type::Bool, eff);
        {
          Effects then_eff;
          block(s.then_block().body, then_eff);
          table_.effects[s.then_block().id] = then_eff;
          merge(eff, then_eff);
        }
        if (s.has_else()) {
          Effects else_eff;
          block(s.else_block().body, else_eff);
          table_.effects[s.else_block().id] = else_eff;
          merge(eff, else_eff);
        }
        break;
      case StmtKind::While:
        expr(*s.expr, eff);
        require(*s.expr, Type::Bool, eff);
        loop_body(s, eff);
        break;
      case StmtKind::For:
        scopes_.emplace_back();
        for (const auto& i : s.init) merge(eff, stmt(i));
        if (s.expr) {
          expr(*s.expr, eff);
          require(*s.expr, Type::Bool, eff);
        }
        for (const auto& st : s.step) merge(eff, stmt(st));
        loop_body(s, eff);
        scopes_.pop_back();
        break;
      case StmtKind::Switch:
        expr(*s.expr, eff);
        require(*s.expr, Type::Int, eff);
        for (const auto& c : s.cases) block(c.body, eff);
        // break inside a switch binds to the switch itself
        eff.has_break = false;
        break;
      case StmtKind::Return:
        expr(*s.expr, eff);
        require(*s.expr, return_type_, eff);
        eff.has_return = true;
        break;
      case StmtKind::Block: block(s.body, eff); break;
      case StmtKind::ExprStmt: expr(*s.expr, eff); break;
      case StmtKind::Break: eff.has_break = true; break;
      case StmtKind::Continue: eff.has_continue = true; break;
    }
    table_.effects[s.id] = eff;
    return eff;
  }

  void loop_body(const Stmt& s, Effects& eff) {
    Effects body_eff;
    block(s.loop_body().body, body_eff);
    table_.effects[s.loop_body().id] = body_eff;
    // break/continue inside the body bind to this loop
    body_eff.has_break = false;
    body_eff.has_continue = false;
    merge(eff, body_eff);
    eff.has_loop = true;
    // non-termination is a fault (FuelExhausted)
    eff.may_fault = true;
  }
};

}  // namespace

SemanticError::SemanticError(SemanticErrorKind kind, std::string name, NodeId node)
    : std::runtime_error(describe(kind, name)), kind_(kind), name_(std::move(name)), node_(node) {}

std::string_view to_string(SemanticErrorKind kind) {
  switch (kind) {
    case SemanticErrorKind::UnboundVar: return "UnboundVar";
    case SemanticErrorKind::DuplicateDecl: return "DuplicateDecl";
    case SemanticErrorKind::CallToUnknownFunction: return "CallToUnknownFunction";
    case SemanticErrorKind::ArityMismatch: return "ArityMismatch";
  }
  return "?";
}

std::optional<Type> SymbolTable::static_type(const Expr& e) const {
  switch (e.kind) {
    case ExprKind::IntLit: return Type::Int;
    case ExprKind::BoolLit: return Type::Bool;
    case ExprKind::Var: {
      auto it = uses.find(e.id);
      if (it == uses.end()) return std::nullopt;
      return it->second.type;
    }
    case ExprKind::Paren: return static_type(e.operands[0]);
    case ExprKind::Unary: {
      auto t = static_type(e.operands[0]);
      const Type want = e.unary_op == UnaryOp::Neg ? Type::Int : Type::Bool;
      if (t != want) return std::nullopt;
      return want;
    }
    case ExprKind::Binary: {
      auto l = static_type(e.operands[0]);
      auto r = static_type(e.operands[1]);
      if (!l || !r) return std::nullopt;
      const BinaryOp op = e.binary_op;
      if (is_arithmetic(op)) {
        if (*l != Type::Int || *r != Type::Int) return std::nullopt;
        return Type::Int;
      }
      if (is_relational(op)) {
        if (*l != Type::Int || *r != Type::Int) return std::nullopt;
        return Type::Bool;
      }
      if (is_equality(op)) {
        if (*l != *r) return std::nullopt;
        return Type::Bool;
      }
      if (*l != Type::Bool || *r != Type::Bool) return std::nullopt;
      return Type::Bool;
    }
    case ExprKind::Ternary: {
      if (static_type(e.operands[0]) != Type::Bool) return std::nullopt;
      auto a = static_type(e.operands[1]);
      auto b = static_type(e.operands[2]);
      if (!a || a != b) return std::nullopt;
      return a;
    }
    case ExprKind::Call: {
      auto fn = functions.find(e.name);
      if (fn == functions.end() || fn->second.params.size() != e.operands.size()) {
        return std::nullopt;
      }
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (static_type(e.operands[i]) != fn->second.params[i]) return std::nullopt;
      }
      return fn->second.return_type;
    }
  }
  return std::nullopt;
}

bool SymbolTable::may_fault(const Expr& e) const {
  return !static_type(e) || contains_div(e) || contains_call(e);
}

SymbolTable resolve_scopes(const SourceUnit& unit) {
  SymbolTable table;
  Resolver(table).run(unit);
  return table;
}

void collect_reads(const Expr& e, std::set<std::string>& out) {
  walk_expr(e, [&](const Expr& node) {
    if (node.kind == ExprKind::Var) out.insert(node.name);
  });
}

bool contains_call(const Expr& e) {
  bool found = false;
  walk_expr(e, [&](const Expr& node) { found |= node.kind == ExprKind::Call; });
  return found;
}

bool contains_div(const Expr& e) {
  bool found = false;
  walk_expr(e, [&](const Expr& node) {
    found |= node.kind == ExprKind::Binary &&
             (node.binary_op == BinaryOp::Div || node.binary_op == BinaryOp::Mod);
  });
  return found;
}

}  // namespace scope_refine::minic
