#include "scope_refine/minic/interpreter.hpp"

#include <limits>
#include <unordered_map>

namespace scope_refine::minic {

namespace {

struct Fault {
  FaultKind kind;
  std::string detail;
};

enum class Flow { Normal, Break, Continue, Return };

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

class Machine {
 public:
  Machine(const SourceUnit& unit, std::uint64_t fuel) : fuel_(fuel) {
    for (const auto& f : unit.functions) functions_.emplace(f.name, &f);
  }

  std::uint64_t steps() const { return steps_; }

  Value call(const FunctionDef& f, std::vector<Value> args) {
    if (depth_ >= kMaxCallDepth) throw Fault{FaultKind::FuelExhausted, "call depth limit"};
    ++depth_;
    std::vector<Frame> saved;
    saved.swap(frames_);
    frames_.emplace_back();
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (args[i].type != f.params[i].type) {
        throw Fault{FaultKind::TypeFault, "argument type mismatch for " + f.name};
      }
      frames_.back().emplace_back(f.params[i].name, args[i]);
    }
    Value result = f.return_type == Type::Int ? Value::of_int(0) : Value::of_bool(false);
    returned_ = Value{};
    Flow flow = exec_list(f.body.body);
    if (flow == Flow::Return) {
      result = returned_;
      if (result.type != f.return_type) {
        throw Fault{FaultKind::TypeFault, "return type mismatch in " + f.name};
      }
    }
    frames_.swap(saved);
    --depth_;
    return result;
  }

 private:
  using Frame = std::vector<std::pair<std::string, Value>>;

  std::unordered_map<std::string, const FunctionDef*> functions_;
  std::vector<Frame> frames_;
  std::uint64_t fuel_;
  std::uint64_t steps_ = 0;
  std::size_t depth_ = 0;
  Value returned_;

  void tick() {
    if (steps_ >= fuel_) throw Fault{FaultKind::FuelExhausted, "fuel exhausted"};
    ++steps_;
  }

  Value* find(const std::string& name) {
    for (auto frame = frames_.rbegin(); frame != frames_.rend(); ++frame) {
      for (auto it = frame->rbegin(); it != frame->rend(); ++it) {
        if (it->first == name) return &it->second;
      }
    }
    return nullptr;
  }

  Value& lookup(const std::string& name) {
    Value* v = find(name);
    if (!v) throw Fault{FaultKind::UnboundVar, name};
    return *v;
  }

  static std::int64_t as_int(const Value& v) {
    if (v.type != Type::Int) throw Fault{FaultKind::TypeFault, "expected int"};
    return v.i;
  }
  static bool as_bool(const Value& v) {
    if (v.type != Type::Bool) throw Fault{FaultKind::TypeFault, "expected bool"};
    return v.b;
  }

  static std::int64_t arith(BinaryOp op, std::int64_t a, std::int64_t b) {
    switch (op) {
      case BinaryOp::Add: return wrap_add(a, b);
      case BinaryOp::Sub: return wrap_sub(a, b);
      case BinaryOp::Mul: return wrap_mul(a, b);
      case BinaryOp::Div:
        if (b == 0) throw Fault{FaultKind::DivByZero, "division by zero"};
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return a;
        return a / b;
      case BinaryOp::Mod:
        if (b == 0) throw Fault{FaultKind::DivByZero, "modulo by zero"};
        if (b == -1) return 0;
        return a % b;
      default: break;
    }
    throw Fault{FaultKind::TypeFault, "not an arithmetic operator"};
  }

  Value eval(const Expr& e) {
    tick();
    switch (e.kind) {
      case ExprKind::IntLit: return Value::of_int(e.int_value);
      case ExprKind::BoolLit: return Value::of_bool(e.bool_value);
      case ExprKind::Var: return lookup(e.name);
      case ExprKind::Paren: return eval(e.operands[0]);
      case ExprKind::Unary: {
        Value v = eval(e.operands[0]);
        if (e.unary_op == UnaryOp::Neg) return Value::of_int(wrap_sub(0, as_int(v)));
        return Value::of_bool(!as_bool(v));
      }
      case ExprKind::Binary: {
        const BinaryOp op = e.binary_op;
        if (op == BinaryOp::And || op == BinaryOp::Or) {
          const bool lhs = as_bool(eval(e.operands[0]));
          if (op == BinaryOp::And && !lhs) return Value::of_bool(false);
          if (op == BinaryOp::Or && lhs) return Value::of_bool(true);
          return Value::of_bool(as_bool(eval(e.operands[1])));
        }
        Value l = eval(e.operands[0]);
        Value r = eval(e.operands[1]);
        if (is_equality(op)) {
          if (l.type != r.type) throw Fault{FaultKind::TypeFault, "mixed-type comparison"};
          const bool eq = l == r;
          return Value::of_bool(op == BinaryOp::Eq ? eq : !eq);
        }
        const std::int64_t a = as_int(l);
        const std::int64_t b = as_int(r);
        switch (op) {
          case BinaryOp::Lt: return Value::of_bool(a < b);
          case BinaryOp::Le: return Value::of_bool(a <= b);
          case BinaryOp::Gt: return Value::of_bool(a > b);
          case BinaryOp::Ge: return Value::of_bool(a >= b);
          default: return Value::of_int(arith(op, a, b));
        }
      }
      case ExprKind::Ternary:
        return as_bool(eval(e.operands[0])) ? eval(e.operands[1]) : eval(e.operands[2]);
      case ExprKind::Call: {
        auto it = functions_.find(e.name);
        if (it == functions_.end()) throw Fault{FaultKind::UnboundVar, e.name};
        const FunctionDef& f = *it->second;
        if (f.params.size() != e.operands.size()) {
          throw Fault{FaultKind::TypeFault, "arity mismatch for " + e.name};
        }
        std::vector<Value> args;
        args.reserve(e.operands.size());
        for (const auto& a : e.operands) args.push_back(eval(a));
        return call(f, std::move(args));
      }
    }
    throw Fault{FaultKind::TypeFault, "unknown expression"};
  }

  void assign(const Stmt& s, Value v) {
    Value& slot = lookup(s.target);
    if (slot.type != v.type) throw Fault{FaultKind::TypeFault, "assignment type mismatch"};
    slot = v;
  }

  Flow exec_list(const std::vector<Stmt>& stmts) {
    for (const auto& s : stmts) {
      Flow f = exec(s);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }

  Flow exec_scoped(const std::vector<Stmt>& stmts) {
    frames_.emplace_back();
    Flow f = exec_list(stmts);
    frames_.pop_back();
    return f;
  }

  Flow exec(const Stmt& s) {
    tick();
    switch (s.kind) {
      case StmtKind::Decl:
        for (const auto& d : s.declarators) {
          Value v = s.decl_type == Type::Int ? Value::of_int(0) : Value::of_bool(false);
          if (d.init) {
            v = eval(*d.init);
            if (v.type != s.decl_type) throw Fault{FaultKind::TypeFault, "initializer type mismatch"};
          }
          frames_.back().emplace_back(d.name, v);
        }
        return Flow::Normal;
      case StmtKind::Assign: assign(s, eval(*s.expr)); return Flow::Normal;
      case StmtKind::CompoundAssign: {
        const std::int64_t rhs = as_int(eval(*s.expr));
        const std::int64_t lhs = as_int(lookup(s.target));
        assign(s, Value::of_int(arith(s.compound_op, lhs, rhs)));
        return Flow::Normal;
      }
      case StmtKind::IncDec: {
        const std::int64_t v = as_int(lookup(s.target));
        assign(s, Value::of_int(s.increment ? wrap_add(v, 1) : wrap_sub(v, 1)));
        return Flow::Normal;
      }
      case StmtKind::If:
        if (as_bool(eval(*s.expr))) return exec(s.then_block());
        if (s.has_else()) return exec(s.else_block());
        return Flow::Normal;
      case StmtKind::While:
        while (true) {
          tick();
          if (!as_bool(eval(*s.expr))) break;
          Flow f = exec(s.loop_body());
          if (f == Flow::Break) break;
          if (f == Flow::Return) return f;
        }
        return Flow::Normal;
      case StmtKind::For: {
        frames_.emplace_back();
        Flow result = Flow::Normal;
        for (const auto& i : s.init) exec(i);
        while (true) {
          tick();
          if (s.expr && !as_bool(eval(*s.expr))) break;
          Flow f = exec(s.loop_body());
          if (f == Flow::Break) break;
          if (f == Flow::Return) {
            result = f;
            break;
          }
          for (const auto& st : s.step) exec(st);
        }
        frames_.pop_back();
        return result;
      }
      case StmtKind::Switch: {
        const std::int64_t subject = as_int(eval(*s.expr));
        std::size_t start = s.cases.size();
        for (std::size_t i = 0; i < s.cases.size(); ++i) {
          if (s.cases[i].label && *s.cases[i].label == subject) {
            start = i;
            break;
          }
        }
        if (start == s.cases.size()) {
          for (std::size_t i = 0; i < s.cases.size(); ++i) {
            if (!s.cases[i].label) {
              start = i;
              break;
            }
          }
        }
        // C fallthrough: run from the matched case until break or return.
        for (std::size_t i = start; i < s.cases.size(); ++i) {
          Flow f = exec_scoped(s.cases[i].body);
          if (f == Flow::Break) return Flow::Normal;
          if (f != Flow::Normal) return f;
        }
        return Flow::Normal;
      }
      case StmtKind::Return:
        returned_ = eval(*s.expr);
        return Flow::Return;
      case StmtKind::Block: return exec_scoped(s.body);
      case StmtKind::ExprStmt: eval(*s.expr); return Flow::Normal;
      case StmtKind::Break: return Flow::Break;
      case StmtKind::Continue: return Flow::Continue;
    }
    return Flow::Normal;
  }
};

}  // namespace

std::string to_string(const Value& v) {
  return v.type == Type::Int ? std::to_string(v.i) : (v.b ? "true" : "false");
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::FuelExhausted: return "FuelExhausted";
    case FaultKind::DivByZero: return "DivByZero";
    case FaultKind::TypeFault: return "TypeFault";
    case FaultKind::UnboundVar: return "UnboundVar";
  }
  return "?";
}

bool same_result(const RunOutcome& a, const RunOutcome& b) { return a.result == b.result; }

std::string to_string(const RunOutcome& outcome) {
  if (outcome.ok()) return to_string(outcome.value());
  return std::string(to_string(outcome.fault().kind));
}

RunOutcome interpret(const SourceUnit& unit, const std::string& entry,
                     const std::vector<Value>& args, std::uint64_t fuel) {
  const FunctionDef* f = unit.find_function(entry);
  if (!f) throw InterpretError("unknown entry function '" + entry + "'");
  if (f->params.size() != args.size()) {
    throw InterpretError("entry '" + entry + "' expects " + std::to_string(f->params.size()) +
                         " arguments, got " + std::to_string(args.size()));
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i].type != f->params[i].type) {
      throw InterpretError("argument " + std::to_string(i + 1) + " of '" + entry +
                           "' has the wrong type");
    }
  }
  Machine m(unit, fuel);
  RunOutcome out;
  try {
    out.result = m.call(*f, args);
  } catch (const Fault& fault) {
    out.result = RuntimeFault{fault.kind, fault.detail};
  }
  out.steps_used = m.steps();
  return out;
}

}  // namespace scope_refine::minic
