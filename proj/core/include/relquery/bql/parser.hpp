/*
 *   Copyright 2026 The relquery Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "relquery/bql/ast.hpp"
#include "relquery/bql/lexer.hpp"

namespace relquery::bql {

/// Parses exactly one statement (a trailing `;` is allowed). Throws
/// ParseError with the offending position and the expected tokens.
Statement parse_statement(std::string_view text);

/// Parses a whole script of `;`-separated statements.
std::vector<Statement> parse_script(std::string_view text);

/// Canonical text of a statement; parsing it yields an equal AST.
std::string to_string(const Statement& statement);
std::string to_string(const Expr& expr);
std::string to_string(const SelectStmt& select);

/// Double-quotes an identifier, doubling embedded quotes.
std::string quote_ident(std::string_view name);
/// Single-quotes a string literal, doubling embedded quotes.
std::string quote_string(std::string_view text);
/// Shortest text that reads back to the same double.
std::string format_number(double x);

}  // namespace relquery::bql
