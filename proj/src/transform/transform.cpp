#include "scope_refine/transform/transform.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "scope_refine/minic/printer.hpp"
#include "scope_refine/minic/scope.hpp"

namespace scope_refine::transform {

using minic::BinaryOp;
using minic::Expr;
using minic::ExprKind;
using minic::FunctionDef;
using minic::Stmt;
using minic::StmtKind;
using minic::SymbolTable;

namespace {

constexpr std::array<OperatorId, kOperatorCount> kAll = {
    OperatorId::VarRename,         OperatorId::ForToWhile,       OperatorId::WhileToFor,
    OperatorId::CompoundAssignExpand, OperatorId::IncDecExpand,  OperatorId::IfBranchSwap,
    OperatorId::RelationalMirror,  OperatorId::CommutativeSwap,  OperatorId::DeclSplit,
    OperatorId::DeadStoreInsert,   OperatorId::ParenWrap,        OperatorId::TernaryToIf,
    OperatorId::SwitchToIfChain,   OperatorId::BoolCondNormalize, OperatorId::IndependentStmtSwap,
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Calls every statement list of the unit: block bodies and switch-case
// bodies. These are the only places where statements may be inserted,
// removed or reordered.
template <class U, class F>
void for_each_list(U& unit, F&& f) {
  minic::walk_unit(
      unit, [](auto&) {},
      [&](auto& s) {
        if (s.kind == StmtKind::Block) {
          f(s.body);
        } else if (s.kind == StmtKind::Switch) {
          for (auto& c : s.cases) f(c.body);
        }
      },
      [](auto&) {});
}

struct ListSlot {
  std::vector<Stmt>* list = nullptr;
  std::size_t index = 0;
};

ListSlot find_in_list(SourceUnit& unit, NodeId id) {
  ListSlot slot;
  for_each_list(unit, [&](std::vector<Stmt>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].id == id) slot = ListSlot{&list, i};
    }
  });
  return slot;
}

Stmt* find_stmt(SourceUnit& unit, NodeId id) {
  Stmt* found = nullptr;
  minic::walk_unit(
      unit, [](FunctionDef&) {}, [&](Stmt& s) { if (s.id == id) found = &s; }, [](Expr&) {});
  return found;
}

Expr* find_expr(SourceUnit& unit, NodeId id) {
  Expr* found = nullptr;
  minic::walk_unit(
      unit, [](FunctionDef&) {}, [](Stmt&) {}, [&](Expr& e) { if (e.id == id) found = &e; });
  return found;
}

// Preorder numbering puts every node of a function between its own id and
// the next function's id.
FunctionDef& enclosing_function(SourceUnit& unit, NodeId id) {
  FunctionDef* owner = &unit.functions.front();
  for (auto& f : unit.functions) {
    if (f.id <= id) owner = &f;
  }
  return *owner;
}

std::set<std::string> names_in(const SourceUnit& unit, const FunctionDef& f) {
  std::set<std::string> names;
  for (const auto& g : unit.functions) names.insert(g.name);
  for (const auto& p : f.params) names.insert(p.name);
  minic::walk_stmt(
      f.body,
      [&](const Stmt& s) {
        for (const auto& d : s.declarators) names.insert(d.name);
        if (!s.target.empty()) names.insert(s.target);
      },
      [&](const Expr& e) {
        if (e.kind == ExprKind::Var) names.insert(e.name);
      });
  return names;
}

std::string hex_name(std::uint64_t h) {
  static const char* kDigits = "0123456789abcdef";
  std::string out = "v_";
  for (int i = 0; i < 6; ++i) out.push_back(kDigits[(h >> (4 * (5 - i))) & 0xf]);
  return out;
}

bool is_jump(const Stmt& s) {
  return s.kind == StmtKind::Return || s.kind == StmtKind::Break ||
         s.kind == StmtKind::Continue;
}

BinaryOp mirrored(BinaryOp op) {
  switch (op) {
    case BinaryOp::Lt: return BinaryOp::Gt;
    case BinaryOp::Le: return BinaryOp::Ge;
    case BinaryOp::Gt: return BinaryOp::Lt;
    case BinaryOp::Ge: return BinaryOp::Le;
    default: return op;  // == and != are symmetric
  }
}

bool is_commutative(BinaryOp op) {
  return op == BinaryOp::Add || op == BinaryOp::Mul || op == BinaryOp::Eq || op == BinaryOp::Ne;
}

// Evaluation order of the two operands may be exchanged without changing the
// result: no calls, at most one side able to fault, and a swap that is
// visible in the printed source.
bool operands_reorderable(const Expr& e, const SymbolTable& table) {
  const Expr& l = e.lhs();
  const Expr& r = e.rhs();
  if (minic::contains_call(l) || minic::contains_call(r)) return false;
  if (table.may_fault(l) && table.may_fault(r)) return false;
  return !minic::same_structure(l, r);
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::none_of(a.begin(), a.end(), [&](const std::string& n) { return b.count(n) > 0; });
}

bool swappable(const Stmt& a, const Stmt& b, const SymbolTable& table) {
  const minic::Effects& ea = table.effects_of(a);
  const minic::Effects& eb = table.effects_of(b);
  auto blocked = [](const minic::Effects& e) {
    return e.has_call || e.has_return || e.has_break || e.has_continue || e.has_loop;
  };
  if (blocked(ea) || blocked(eb)) return false;
  if (ea.may_fault && eb.may_fault) return false;
  if (!disjoint(ea.writes, eb.reads) || !disjoint(eb.writes, ea.reads) ||
      !disjoint(ea.writes, eb.writes)) {
    return false;
  }
  return !minic::same_structure(a, b);
}

bool switch_convertible(const Stmt& s, const SymbolTable& table) {
  if (minic::contains_call(*s.expr)) return false;
  std::size_t labelled = 0;
  std::size_t defaults = 0;
  for (const auto& c : s.cases) {
    (c.label ? labelled : defaults) += 1;
    if (c.body.empty()) return false;
    const Stmt& last = c.body.back();
    if (last.kind != StmtKind::Break && last.kind != StmtKind::Return) return false;
    for (std::size_t i = 0; i + 1 < c.body.size(); ++i) {
      if (table.effects_of(c.body[i]).has_break) return false;
    }
  }
  return labelled > 0 && defaults <= 1;
}

// Names a statement mentions, as reads or as assignment targets.
std::set<std::string> mentioned(const Stmt& s) {
  std::set<std::string> names;
  minic::walk_stmt(
      s, [&](const Stmt& st) { if (!st.target.empty()) names.insert(st.target); },
      [&](const Expr& e) { if (e.kind == ExprKind::Var) names.insert(e.name); });
  return names;
}

class SiteFinder {
 public:
  SiteFinder(const SourceUnit& unit, const SymbolTable& table) : unit_(unit), table_(table) {}

  std::vector<Site> find(OperatorId op) const {
    std::vector<Site> sites;
    switch (op) {
      case OperatorId::VarRename:
        for (const auto& f : unit_.functions) {
          for (std::size_t i = 0; i < f.params.size(); ++i) sites.push_back({f.id, i});
        }
        each_stmt([&](const Stmt& s) {
          if (s.kind != StmtKind::Decl) return;
          for (std::size_t i = 0; i < s.declarators.size(); ++i) sites.push_back({s.id, i});
        });
        break;
      case OperatorId::ForToWhile:
        each_stmt([&](const Stmt& s) {
          if (s.kind == StmtKind::For && !table_.effects_of(s.loop_body()).has_continue) {
            sites.push_back({s.id, 0});
          }
        });
        break;
      case OperatorId::WhileToFor: stmts_of_kind(StmtKind::While, sites); break;
      case OperatorId::CompoundAssignExpand: stmts_of_kind(StmtKind::CompoundAssign, sites); break;
      case OperatorId::IncDecExpand: stmts_of_kind(StmtKind::IncDec, sites); break;
      case OperatorId::IfBranchSwap: stmts_of_kind(StmtKind::If, sites); break;
      case OperatorId::RelationalMirror:
        each_expr([&](const Expr& e) {
          if (e.kind == ExprKind::Binary &&
              (minic::is_relational(e.binary_op) || minic::is_equality(e.binary_op)) &&
              operands_reorderable(e, table_)) {
            sites.push_back({e.id, 0});
          }
        });
        break;
      case OperatorId::CommutativeSwap:
        each_expr([&](const Expr& e) {
          if (e.kind == ExprKind::Binary && is_commutative(e.binary_op) &&
              operands_reorderable(e, table_)) {
            sites.push_back({e.id, 0});
          }
        });
        break;
      case OperatorId::DeclSplit:
        each_listed([&](const Stmt& s) {
          if (s.kind == StmtKind::Decl && s.declarators.size() > 1) sites.push_back({s.id, 0});
        });
        break;
      case OperatorId::DeadStoreInsert:
        each_listed([&](const Stmt& s) {
          if (!is_jump(s)) sites.push_back({s.id, 0});
        });
        break;
      case OperatorId::ParenWrap:
        each_expr([&](const Expr& e) {
          if (e.kind == ExprKind::Binary) sites.push_back({e.id, 0});
        });
        break;
      case OperatorId::TernaryToIf:
        each_listed([&](const Stmt& s) {
          if (s.kind != StmtKind::Assign) return;
          const Expr& rhs = minic::strip_parens(*s.expr);
          if (rhs.kind == ExprKind::Ternary && !minic::contains_call(rhs.operands[0])) {
            sites.push_back({s.id, 0});
          }
        });
        break;
      case OperatorId::SwitchToIfChain:
        each_listed([&](const Stmt& s) {
          if (s.kind == StmtKind::Switch && switch_convertible(s, table_)) {
            sites.push_back({s.id, 0});
          }
        });
        break;
      case OperatorId::BoolCondNormalize: {
        auto consider = [&](const Expr& cond) {
          if (table_.static_type(cond) == minic::Type::Bool) sites.push_back({cond.id, 0});
        };
        minic::walk_unit(
            unit_, [](const FunctionDef&) {},
            [&](const Stmt& s) {
              if ((s.kind == StmtKind::If || s.kind == StmtKind::While ||
                   s.kind == StmtKind::For) &&
                  s.expr) {
                consider(*s.expr);
              }
            },
            [&](const Expr& e) {
              if (e.kind == ExprKind::Ternary) consider(e.operands[0]);
            });
        break;
      }
      case OperatorId::IndependentStmtSwap:
        for_each_list(unit_, [&](const std::vector<Stmt>& list) {
          for (std::size_t i = 0; i + 1 < list.size(); ++i) {
            if (swappable(list[i], list[i + 1], table_)) sites.push_back({list[i].id, 0});
          }
        });
        break;
    }
    std::sort(sites.begin(), sites.end());
    return sites;
  }

 private:
  const SourceUnit& unit_;
  const SymbolTable& table_;

  template <class F>
  void each_stmt(F&& f) const {
    minic::walk_unit(unit_, [](const FunctionDef&) {}, f, [](const Expr&) {});
  }

  template <class F>
  void each_expr(F&& f) const {
    minic::walk_unit(unit_, [](const FunctionDef&) {}, [](const Stmt&) {}, f);
  }

  // Statements that sit directly in a block or case body (not for-clauses).
  template <class F>
  void each_listed(F&& f) const {
    for_each_list(unit_, [&](const std::vector<Stmt>& list) {
      for (const auto& s : list) f(s);
    });
  }

  void stmts_of_kind(StmtKind kind, std::vector<Site>& sites) const {
    each_stmt([&](const Stmt& s) {
      if (s.kind == kind) sites.push_back({s.id, 0});
    });
  }
};

// ---- rewrites. Each receives a copy of the unit with original ids and a
// site already known to be applicable.

void rename_var(SourceUnit& unit, const SymbolTable& table, const Site& site, std::uint64_t seed) {
  FunctionDef& f = enclosing_function(unit, site.node_id);
  const std::set<std::string> taken = names_in(unit, f);
  std::string fresh;
  for (std::uint64_t attempt = 0;; ++attempt) {
    fresh = hex_name(splitmix(seed ^ splitmix(attempt)));
    if (!taken.count(fresh)) break;
  }
  auto bound_here = [&](const minic::Binding& b) {
    return b.decl_node == site.node_id && b.index == site.index;
  };
  if (f.id == site.node_id) {
    f.params[site.index].name = fresh;
  } else {
    find_stmt(unit, site.node_id)->declarators[site.index].name = fresh;
  }
  minic::walk_stmt(
      f.body,
      [&](Stmt& s) {
        auto t = table.targets.find(s.id);
        if (t != table.targets.end() && bound_here(t->second)) s.target = fresh;
      },
      [&](Expr& e) {
        if (e.kind != ExprKind::Var) return;
        auto u = table.uses.find(e.id);
        if (u != table.uses.end() && bound_here(u->second)) e.name = fresh;
      });
}

void for_to_while(SourceUnit& unit, const Site& site) {
  ListSlot slot = find_in_list(unit, site.node_id);
  Stmt loop = std::move((*slot.list)[slot.index]);
  Stmt body = std::move(loop.body[0]);

  // The step runs outside the body's scope; splice the body statements only
  // when none of its top-level declarations could capture a step name.
  std::set<std::string> step_names;
  for (const auto& st : loop.step) {
    const auto m = mentioned(st);
    step_names.insert(m.begin(), m.end());
  }
  bool capture = false;
  for (const auto& s : body.body) {
    for (const auto& d : s.declarators) capture |= step_names.count(d.name) > 0;
  }
  std::vector<Stmt> inner;
  if (capture) {
    inner.push_back(std::move(body));
  } else {
    inner = std::move(body.body);
  }
  for (auto& st : loop.step) inner.push_back(std::move(st));

  Expr cond = loop.expr ? std::move(*loop.expr) : Expr::bool_lit(true);
  std::vector<Stmt> outer;
  for (auto& i : loop.init) outer.push_back(std::move(i));
  outer.push_back(Stmt::while_loop(std::move(cond), Stmt::block(std::move(inner))));
  (*slot.list)[slot.index] = Stmt::block(std::move(outer));
}

void while_to_for(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  s = Stmt::for_loop(std::nullopt, std::move(*s.expr), std::nullopt, std::move(s.body[0]));
}

void expand_compound(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  Expr value = Expr::binary(s.compound_op, Expr::var(s.target), std::move(*s.expr));
  s = Stmt::assign(s.target, std::move(value));
}

void expand_inc_dec(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  const BinaryOp op = s.increment ? BinaryOp::Add : BinaryOp::Sub;
  s = Stmt::assign(s.target, Expr::binary(op, Expr::var(s.target), Expr::int_lit(1)));
}

void swap_branches(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  Stmt then_block = std::move(s.body[0]);
  Stmt else_block = s.has_else() ? std::move(s.body[1]) : Stmt::block({});
  s = Stmt::if_else(Expr::unary(minic::UnaryOp::Not, std::move(*s.expr)), std::move(else_block),
                    std::move(then_block));
}

void reorder_operands(SourceUnit& unit, const Site& site, bool mirror) {
  Expr& e = *find_expr(unit, site.node_id);
  const BinaryOp op = mirror ? mirrored(e.binary_op) : e.binary_op;
  e = Expr::binary(op, std::move(e.operands[1]), std::move(e.operands[0]));
}

void split_decl(SourceUnit& unit, const Site& site) {
  ListSlot slot = find_in_list(unit, site.node_id);
  Stmt decl = std::move((*slot.list)[slot.index]);
  std::vector<Stmt> parts;
  for (auto& d : decl.declarators) parts.push_back(Stmt::decl(decl.decl_type, {std::move(d)}));
  auto at = slot.list->erase(slot.list->begin() + static_cast<std::ptrdiff_t>(slot.index));
  slot.list->insert(at, std::make_move_iterator(parts.begin()),
                    std::make_move_iterator(parts.end()));
}

void insert_dead_store(SourceUnit& unit, const Site& site) {
  const std::set<std::string> taken = names_in(unit, enclosing_function(unit, site.node_id));
  std::string fresh;
  for (int k = 0;; ++k) {
    fresh = "_ds_" + std::to_string(k);
    if (!taken.count(fresh)) break;
  }
  ListSlot slot = find_in_list(unit, site.node_id);
  Stmt store = Stmt::decl(minic::Type::Int, {minic::Declarator{fresh, Expr::int_lit(0)}});
  slot.list->insert(slot.list->begin() + static_cast<std::ptrdiff_t>(slot.index),
                    std::move(store));
}

void wrap_paren(SourceUnit& unit, const Site& site) {
  Expr& e = *find_expr(unit, site.node_id);
  e = Expr::paren(std::move(e));
}

void ternary_to_if(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  Expr rhs = minic::strip_parens(*s.expr);
  const std::string target = s.target;
  std::vector<Stmt> then_body;
  then_body.push_back(Stmt::assign(target, std::move(rhs.operands[1])));
  std::vector<Stmt> else_body;
  else_body.push_back(Stmt::assign(target, std::move(rhs.operands[2])));
  s = Stmt::if_else(std::move(rhs.operands[0]), Stmt::block(std::move(then_body)),
                    Stmt::block(std::move(else_body)));
}

Expr label_expr(std::int64_t label) {
  // A negative literal is spelled as negation so the printed form re-parses
  // to the same tree.
  if (label < 0) return Expr::unary(minic::UnaryOp::Neg, Expr::int_lit(-label));
  return Expr::int_lit(label);
}

void switch_to_if_chain(SourceUnit& unit, const Site& site) {
  Stmt& s = *find_stmt(unit, site.node_id);
  auto body_of = [](minic::SwitchCase& c) {
    if (c.body.back().kind == StmtKind::Break) c.body.pop_back();
    return Stmt::block(std::move(c.body));
  };
  std::optional<Stmt> chain;
  for (auto& c : s.cases) {
    if (!c.label) chain = body_of(c);
  }
  for (auto it = s.cases.rbegin(); it != s.cases.rend(); ++it) {
    if (!it->label) continue;
    Expr cond = Expr::binary(BinaryOp::Eq, *s.expr, label_expr(*it->label));
    std::optional<Stmt> else_block;
    if (chain) {
      if (chain->kind == StmtKind::Block) {
        else_block = std::move(chain);
      } else {
        std::vector<Stmt> wrapped;
        wrapped.push_back(std::move(*chain));
        else_block = Stmt::block(std::move(wrapped));
      }
    }
    chain = Stmt::if_else(std::move(cond), body_of(*it), std::move(else_block));
  }
  s = std::move(*chain);
}

void normalize_cond(SourceUnit& unit, const Site& site) {
  Expr& e = *find_expr(unit, site.node_id);
  e = Expr::binary(BinaryOp::Eq, std::move(e), Expr::bool_lit(true));
}

void swap_stmts(SourceUnit& unit, const Site& site) {
  ListSlot slot = find_in_list(unit, site.node_id);
  std::swap((*slot.list)[slot.index], (*slot.list)[slot.index + 1]);
}

void rewrite(SourceUnit& unit, const SymbolTable& table, OperatorId op, const Site& site,
             std::uint64_t seed) {
  switch (op) {
    case OperatorId::VarRename: rename_var(unit, table, site, seed); break;
    case OperatorId::ForToWhile: for_to_while(unit, site); break;
    case OperatorId::WhileToFor: while_to_for(unit, site); break;
    case OperatorId::CompoundAssignExpand: expand_compound(unit, site); break;
    case OperatorId::IncDecExpand: expand_inc_dec(unit, site); break;
    case OperatorId::IfBranchSwap: swap_branches(unit, site); break;
    case OperatorId::RelationalMirror: reorder_operands(unit, site, true); break;
    case OperatorId::CommutativeSwap: reorder_operands(unit, site, false); break;
    case OperatorId::DeclSplit: split_decl(unit, site); break;
    case OperatorId::DeadStoreInsert: insert_dead_store(unit, site); break;
    case OperatorId::ParenWrap: wrap_paren(unit, site); break;
    case OperatorId::TernaryToIf: ternary_to_if(unit, site); break;
    case OperatorId::SwitchToIfChain: switch_to_if_chain(unit, site); break;
    case OperatorId::BoolCondNormalize: normalize_cond(unit, site); break;
    case OperatorId::IndependentStmtSwap: swap_stmts(unit, site); break;
  }
}

std::optional<SymbolTable> try_resolve(const SourceUnit& unit) {
  try {
    return minic::resolve_scopes(unit);
  } catch (const minic::SemanticError&) {
    return std::nullopt;
  }
}

}  // namespace

const std::array<OperatorId, kOperatorCount>& all_operators() { return kAll; }

std::string_view to_string(OperatorId op) {
  switch (op) {
    case OperatorId::VarRename: return "VarRename";
    case OperatorId::ForToWhile: return "ForToWhile";
    case OperatorId::WhileToFor: return "WhileToFor";
    case OperatorId::CompoundAssignExpand: return "CompoundAssignExpand";
    case OperatorId::IncDecExpand: return "IncDecExpand";
    case OperatorId::IfBranchSwap: return "IfBranchSwap";
    case OperatorId::RelationalMirror: return "RelationalMirror";
    case OperatorId::CommutativeSwap: return "CommutativeSwap";
    case OperatorId::DeclSplit: return "DeclSplit";
    case OperatorId::DeadStoreInsert: return "DeadStoreInsert";
    case OperatorId::ParenWrap: return "ParenWrap";
    case OperatorId::TernaryToIf: return "TernaryToIf";
    case OperatorId::SwitchToIfChain: return "SwitchToIfChain";
    case OperatorId::BoolCondNormalize: return "BoolCondNormalize";
    case OperatorId::IndependentStmtSwap: return "IndependentStmtSwap";
  }
  return "?";
}

std::optional<OperatorId> operator_from_number(int n) {
  if (n < 1 || n > static_cast<int>(kOperatorCount)) return std::nullopt;
  return static_cast<OperatorId>(n);
}

std::optional<OperatorId> operator_from_name(std::string_view name) {
  for (OperatorId op : kAll) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

std::vector<Site> applicable_sites(const SourceUnit& unit, OperatorId op) {
  auto table = try_resolve(unit);
  if (!table) return {};
  return SiteFinder(unit, *table).find(op);
}

std::vector<OperatorId> applicable_operators(const SourceUnit& unit) {
  auto table = try_resolve(unit);
  if (!table) return {};
  SiteFinder finder(unit, *table);
  std::vector<OperatorId> ops;
  for (OperatorId op : kAll) {
    if (!finder.find(op).empty()) ops.push_back(op);
  }
  return ops;
}

TransformOutcome apply_op(const SourceUnit& unit, OperatorId op, const Site& site,
                          std::uint64_t seed) {
  auto table = try_resolve(unit);
  if (!table) return Inapplicable{"unit does not resolve"};
  const auto sites = SiteFinder(unit, *table).find(op);
  if (!std::binary_search(sites.begin(), sites.end(), site)) {
    return Inapplicable{std::string(to_string(op)) + " does not apply at node " +
                        std::to_string(site.node_id) + "." + std::to_string(site.index)};
  }
  SourceUnit out = unit;
  rewrite(out, *table, op, site, seed);
  minic::renumber(out);
  return Applied{std::move(out), site};
}

GenomeResult apply_genome(const SourceUnit& unit, const TransformGenome& genome) {
  GenomeResult result{unit, 0};
  for (const Edit& edit : genome.edits) {
    const auto sites = applicable_sites(result.unit, edit.op);
    if (edit.rank >= sites.size()) continue;
    auto outcome = apply_op(result.unit, edit.op, sites[edit.rank], edit.seed);
    if (auto* applied = std::get_if<Applied>(&outcome)) {
      result.unit = std::move(applied->unit);
      ++result.applied_count;
    }
  }
  return result;
}

TransformGenome random_genome(const SourceUnit& unit, std::size_t len, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  TransformGenome genome;
  SourceUnit current = unit;
  for (std::size_t i = 0; i < len; ++i) {
    auto table = try_resolve(current);
    if (!table) break;
    SiteFinder finder(current, *table);
    std::vector<std::pair<OperatorId, std::vector<Site>>> options;
    for (OperatorId op : kAll) {
      auto sites = finder.find(op);
      if (!sites.empty()) options.emplace_back(op, std::move(sites));
    }
    if (options.empty()) break;
    const auto& [op, sites] =
        options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    Edit edit;
    edit.op = op;
    edit.rank =
        static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, sites.size() - 1)(rng));
    edit.seed = rng();
    SourceUnit next = current;
    rewrite(next, *table, op, sites[edit.rank], edit.seed);
    minic::renumber(next);
    current = std::move(next);
    genome.edits.push_back(edit);
  }
  return genome;
}

std::string to_string(const TransformGenome& genome) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < genome.edits.size(); ++i) {
    const Edit& e = genome.edits[i];
    if (i) out << ", ";
    out << static_cast<int>(e.op) << ':' << e.rank << ':' << e.seed;
  }
  out << ']';
  return out.str();
}

}  // namespace scope_refine::transform
