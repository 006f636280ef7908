#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scope_refine::minic {

enum class TokenKind {
  Identifier,
  Integer,
  Keyword,
  Punct,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  int line = 1;
  int column = 1;
};

// Syntax error with a 1-based source position and the set of tokens the
// parser would have accepted there.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string message, std::vector<std::string> expected = {});

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::string message_;
  std::vector<std::string> expected_;
};

// Illegal character or malformed literal.
class LexError : public ParseError {
 public:
  using ParseError::ParseError;
};

bool is_keyword(std::string_view word);

// Tokenizes MiniC source, dropping whitespace and comments. The returned list
// always ends with an End token.
std::vector<Token> lex(std::string_view source);

}  // namespace scope_refine::minic
