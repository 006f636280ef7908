#include "scope_refine/minic/lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>

namespace scope_refine::minic {

namespace {

std::string format_position(int line, int column, const std::string& message) {
  return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

constexpr std::array<std::string_view, 14> kKeywords = {
    "int",  "bool", "true",   "false", "if",      "else",  "while",
    "for",  "switch", "case", "default", "break", "continue", "return"};

// Longest match first.
constexpr std::array<std::string_view, 30> kPuncts = {
    "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "++", "--", "+", "-",
    "*",  "/",  "%",  "<",  ">",  "=",  "!",  "?",  ":",  ";",  ",",  "(",  ")",  "{", "}"};

}  // namespace

ParseError::ParseError(int line, int column, std::string message, std::vector<std::string> expected)
    : std::runtime_error(format_position(line, column, message)),
      line_(line),
      column_(column),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return false;
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const int start_line = line;
      const int start_col = col;
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) throw LexError(start_line, start_col, "unterminated comment");
      advance(2);
      continue;
    }

    Token tok;
    tok.line = line;
    tok.column = col;
    const auto uc = static_cast<unsigned char>(c);

    if (std::isalpha(uc) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      tok.text = std::string(src.substr(i, j - i));
      tok.kind = is_keyword(tok.text) ? TokenKind::Keyword : TokenKind::Identifier;
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }

    if (std::isdigit(uc)) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        throw LexError(line, col, "malformed integer literal");
      }
      tok.text = std::string(src.substr(i, j - i));
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
      if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
        throw LexError(line, col, "integer literal out of range");
      }
      tok.kind = TokenKind::Integer;
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }

    bool matched = false;
    for (auto p : kPuncts) {
      if (src.substr(i, p.size()) == p) {
        tok.kind = TokenKind::Punct;
        tok.text = std::string(p);
        advance(p.size());
        out.push_back(std::move(tok));
        matched = true;
        break;
      }
    }
    if (matched) continue;

    std::string shown = uc >= 0x20 && uc < 0x7f ? std::string(1, c) : "\\x" + std::to_string(uc);
    throw LexError(line, col, "illegal character '" + shown + "'");
  }

  Token end;
  end.kind = TokenKind::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

}  // namespace scope_refine::minic
