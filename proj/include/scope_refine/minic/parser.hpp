#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "scope_refine/minic/ast.hpp"
#include "scope_refine/minic/lexer.hpp"

namespace scope_refine::minic {

struct SourceText {
  std::string text;
  std::optional<std::string> origin;
};

// Parses a whole translation unit. Throws ParseError (or LexError) with the
// position of the first offending token. The result carries fresh preorder
// NodeIds.
SourceUnit parse(std::string_view source);
SourceUnit parse(const SourceText& source);

}  // namespace scope_refine::minic
