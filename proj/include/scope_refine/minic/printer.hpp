#pragma once

#include <string>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::minic {

// Canonical source form: 4-space indentation, one statement per line,
// mandatory braces, single spaces around binary operators, trailing newline.
// This is the only code-emission path; models only ever see its output.
std::string print_source(const SourceUnit& unit);

std::string print_expr(const Expr& e);

// Statement in canonical form at the given indentation depth. Statements that
// span several lines end with a newline; simple statements too.
std::string print_stmt(const Stmt& s, int depth = 0);

}  // namespace scope_refine::minic
