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

#include "relquery/errors.hpp"

namespace relquery::bql {

enum class TokenKind {
    word,          // bare identifier or keyword; `text` is uppercased for matching
    quoted_ident,  // "name"
    string,        // 'text'
    number,
    symbol,        // ( ) , ; * = < > <= >= != <> + - /
    end,
};

struct Token {
    TokenKind kind = TokenKind::end;
    /// Uppercased for words, unescaped for quoted forms, verbatim otherwise.
    std::string text;
    /// Original spelling (words keep their case here).
    std::string raw;
    SourcePos pos;
};

/// Keywords are case-insensitive; `--` starts a comment; a `...` prompt at the
/// start of a line is skipped. Throws ParseError on unterminated quotes or
/// stray characters.
std::vector<Token> tokenize(std::string_view text);

/// Splits a script on `;` outside quotes, comments and parentheses.
/// Statements that contain only whitespace, comments or prompts are dropped.
struct StatementText {
    std::string text;
    SourcePos pos;
};
std::vector<StatementText> split_statements(std::string_view script);

std::string describe(const Token& token);

}  // namespace relquery::bql
