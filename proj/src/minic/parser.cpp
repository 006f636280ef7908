#include "scope_refine/minic/parser.hpp"

#include <algorithm>

namespace scope_refine::minic {

namespace {

std::string quoted(const std::string& s) { return "'" + s + "'"; }

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  SourceUnit parse_unit() {
    SourceUnit unit;
    if (at_end()) fail_expected({"'int'", "'bool'"});
    while (!at_end()) unit.functions.push_back(parse_function());
    renumber(unit);
    return unit;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  // Alternatives probed at the current position; reported on failure.
  std::vector<std::string> tried_;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return cur().kind == TokenKind::End; }

  bool is(std::string_view text) const {
    return (cur().kind == TokenKind::Punct || cur().kind == TokenKind::Keyword) &&
           cur().text == text;
  }

  Token consume() {
    tried_.clear();
    return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_];
  }

  bool accept(std::string_view text) {
    if (is(text)) {
      consume();
      return true;
    }
    tried_.push_back(quoted(std::string(text)));
    return false;
  }

  [[noreturn]] void fail_expected(std::vector<std::string> expected) {
    for (auto& t : tried_) {
      if (std::find(expected.begin(), expected.end(), t) == expected.end()) {
        expected.insert(expected.begin(), t);
      }
    }
    std::string msg = "expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i > 0) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
    if (at_end()) {
      msg += " before end of input";
    } else {
      msg += ", found " + quoted(cur().text);
    }
    throw ParseError(cur().line, cur().column, msg, expected);
  }

  void expect(std::string_view text) {
    if (!accept(text)) {
      tried_.pop_back();
      fail_expected({quoted(std::string(text))});
    }
  }

  std::string expect_identifier() {
    if (cur().kind != TokenKind::Identifier) fail_expected({"identifier"});
    return consume().text;
  }

  bool at_type() const { return is("int") || is("bool"); }

  Type parse_type() {
    if (accept("int")) return Type::Int;
    if (accept("bool")) return Type::Bool;
    tried_.pop_back();
    tried_.pop_back();
    fail_expected({"'int'", "'bool'"});
  }

  FunctionDef parse_function() {
    FunctionDef f;
    f.return_type = parse_type();
    f.name = expect_identifier();
    expect("(");
    if (!accept(")")) {
      do {
        Param p;
        p.type = parse_type();
        p.name = expect_identifier();
        f.params.push_back(std::move(p));
      } while (accept(","));
      expect(")");
    }
    if (!is("{")) fail_expected({"'{'"});
    f.body = parse_block();
    return f;
  }

  Stmt parse_block() {
    expect("{");
    std::vector<Stmt> stmts;
    while (!is("}")) {
      if (at_end()) fail_expected({"'}'"});
      stmts.push_back(parse_statement());
    }
    consume();
    return Stmt::block(std::move(stmts));
  }

  // Braced block, or a single statement wrapped into one.
  Stmt parse_body() {
    if (is("{")) return parse_block();
    std::vector<Stmt> one;
    one.push_back(parse_statement());
    return Stmt::block(std::move(one));
  }

  Stmt parse_decl() {
    const Type t = parse_type();
    std::vector<Declarator> ds;
    do {
      Declarator d;
      d.name = expect_identifier();
      if (accept("=")) d.init = parse_expr();
      ds.push_back(std::move(d));
    } while (accept(","));
    return Stmt::decl(t, std::move(ds));
  }

  // Assignment forms, inc/dec, declarations (when allowed) or a bare
  // expression. No trailing semicolon.
  Stmt parse_simple(bool allow_decl) {
    if (allow_decl && at_type()) return parse_decl();
    if (cur().kind == TokenKind::Identifier && peek().kind == TokenKind::Punct) {
      const std::string& op = peek().text;
      static const std::pair<const char*, BinaryOp> kCompound[] = {
          {"+=", BinaryOp::Add}, {"-=", BinaryOp::Sub}, {"*=", BinaryOp::Mul},
          {"/=", BinaryOp::Div}, {"%=", BinaryOp::Mod}};
      if (op == "=") {
        std::string target = consume().text;
        consume();
        return Stmt::assign(std::move(target), parse_expr());
      }
      for (const auto& [text, bop] : kCompound) {
        if (op == text) {
          std::string target = consume().text;
          consume();
          return Stmt::compound_assign(std::move(target), bop, parse_expr());
        }
      }
      if (op == "++" || op == "--") {
        std::string target = consume().text;
        consume();
        return Stmt::inc_dec(std::move(target), op == "++");
      }
    }
    return Stmt::expr_stmt(parse_expr());
  }

  Stmt parse_statement() {
    if (is("{")) return parse_block();
    if (at_type()) {
      Stmt s = parse_decl();
      expect(";");
      return s;
    }
    if (accept("if")) {
      expect("(");
      Expr cond = parse_expr();
      expect(")");
      Stmt then_block = parse_body();
      std::optional<Stmt> else_block;
      if (accept("else")) {
        if (is("if")) {
          std::vector<Stmt> one;
          one.push_back(parse_statement());
          else_block = Stmt::block(std::move(one));
        } else {
          else_block = parse_body();
        }
      }
      return Stmt::if_else(std::move(cond), std::move(then_block), std::move(else_block));
    }
    if (accept("while")) {
      expect("(");
      Expr cond = parse_expr();
      expect(")");
      return Stmt::while_loop(std::move(cond), parse_body());
    }
    if (accept("for")) {
      expect("(");
      std::optional<Stmt> init;
      if (!accept(";")) {
        init = parse_simple(true);
        expect(";");
      }
      std::optional<Expr> cond;
      if (!accept(";")) {
        cond = parse_expr();
        expect(";");
      }
      std::optional<Stmt> step;
      if (!accept(")")) {
        step = parse_simple(false);
        expect(")");
      }
      return Stmt::for_loop(std::move(init), std::move(cond), std::move(step), parse_body());
    }
    if (accept("switch")) {
      expect("(");
      Expr subject = parse_expr();
      expect(")");
      expect("{");
      std::vector<SwitchCase> cases;
      while (!accept("}")) {
        SwitchCase c;
        if (accept("case")) {
          const bool negative = accept("-");
          if (cur().kind != TokenKind::Integer) fail_expected({"integer literal"});
          const std::int64_t v = std::stoll(consume().text);
          c.label = negative ? -v : v;
        } else if (accept("default")) {
          c.label = std::nullopt;
        } else {
          fail_expected({"'case'", "'default'", "'}'"});
        }
        expect(":");
        while (!is("case") && !is("default") && !is("}")) {
          if (at_end()) fail_expected({"'}'"});
          c.body.push_back(parse_statement());
        }
        cases.push_back(std::move(c));
      }
      return Stmt::switch_stmt(std::move(subject), std::move(cases));
    }
    if (accept("return")) {
      Expr value = parse_expr();
      expect(";");
      return Stmt::return_stmt(std::move(value));
    }
    if (accept("break")) {
      expect(";");
      return Stmt::break_stmt();
    }
    if (accept("continue")) {
      expect(";");
      return Stmt::continue_stmt();
    }
    tried_.clear();
    Stmt s = parse_simple(false);
    expect(";");
    return s;
  }

  Expr parse_expr() { return parse_ternary(); }

  Expr parse_ternary() {
    Expr cond = parse_binary(1);
    if (is("?")) {
      consume();
      Expr then_value = parse_expr();
      expect(":");
      Expr else_value = parse_ternary();
      Expr e;
      e.kind = ExprKind::Ternary;
      e.operands.push_back(std::move(cond));
      e.operands.push_back(std::move(then_value));
      e.operands.push_back(std::move(else_value));
      return e;
    }
    return cond;
  }

  std::optional<BinaryOp> binary_at_cursor() const {
    if (cur().kind != TokenKind::Punct) return std::nullopt;
    static const std::pair<const char*, BinaryOp> kOps[] = {
        {"||", BinaryOp::Or},  {"&&", BinaryOp::And}, {"==", BinaryOp::Eq},
        {"!=", BinaryOp::Ne},  {"<", BinaryOp::Lt},   {"<=", BinaryOp::Le},
        {">", BinaryOp::Gt},   {">=", BinaryOp::Ge},  {"+", BinaryOp::Add},
        {"-", BinaryOp::Sub},  {"*", BinaryOp::Mul},  {"/", BinaryOp::Div},
        {"%", BinaryOp::Mod}};
    for (const auto& [text, op] : kOps) {
      if (cur().text == text) return op;
    }
    return std::nullopt;
  }

  // Precedence climbing; all binary operators are left-associative.
  Expr parse_binary(int min_prec) {
    Expr lhs = parse_unary();
    while (true) {
      auto op = binary_at_cursor();
      if (!op || precedence(*op) < min_prec) break;
      consume();
      Expr rhs = parse_binary(precedence(*op) + 1);
      lhs = Expr::binary_raw(*op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_unary() {
    if (is("-") || is("!")) {
      const UnaryOp op = cur().text == "-" ? UnaryOp::Neg : UnaryOp::Not;
      consume();
      Expr e;
      e.kind = ExprKind::Unary;
      e.unary_op = op;
      e.operands.push_back(parse_unary());
      return e;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    if (cur().kind == TokenKind::Integer) return Expr::int_lit(std::stoll(consume().text));
    if (is("true") || is("false")) return Expr::bool_lit(consume().text == "true");
    if (cur().kind == TokenKind::Identifier) {
      std::string name = consume().text;
      if (is("(")) {
        consume();
        std::vector<Expr> args;
        if (!accept(")")) {
          do {
            args.push_back(parse_expr());
          } while (accept(","));
          expect(")");
        }
        return Expr::call(std::move(name), std::move(args));
      }
      return Expr::var(std::move(name));
    }
    if (is("(")) {
      consume();
      Expr inner = parse_expr();
      expect(")");
      return Expr::paren(std::move(inner));
    }
    fail_expected({"expression"});
  }
};

}  // namespace

SourceUnit parse(std::string_view source) { return Parser(lex(source)).parse_unit(); }

SourceUnit parse(const SourceText& source) { return parse(source.text); }

}  // namespace scope_refine::minic
