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
#include "relquery/bql/lexer.hpp"

#include <cctype>

namespace relquery::bql {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    bool done() const { return i_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const { return i_ + ahead < text_.size() ? text_[i_ + ahead] : '\0'; }
    SourcePos pos() const { return {i_, line_, i_ - line_start_ + 1}; }
    bool at_line_start() const {
        for (std::size_t j = line_start_; j < i_; ++j) {
            if (text_[j] != ' ' && text_[j] != '\t') return false;
        }
        return true;
    }
    char advance() {
        const char ch = text_[i_++];
        if (ch == '\n') {
            ++line_;
            line_start_ = i_;
        }
        return ch;
    }

private:
    std::string_view text_;
    std::size_t i_ = 0;
    std::size_t line_ = 1;
    std::size_t line_start_ = 0;
};

bool is_word_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool is_word_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; }

// Skips whitespace, comments and continuation prompts; returns false at end.
bool skip_trivia(Cursor& c) {
    while (!c.done()) {
        const char ch = c.peek();
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            c.advance();
        } else if (ch == '-' && c.peek(1) == '-') {
            while (!c.done() && c.peek() != '\n') c.advance();
        } else if (ch == '.' && c.peek(1) == '.' && c.peek(2) == '.' && c.at_line_start()) {
            c.advance();
            c.advance();
            c.advance();
        } else {
            return true;
        }
    }
    return false;
}

std::string read_quoted(Cursor& c, char quote, const char* what) {
    const SourcePos start = c.pos();
    c.advance();
    std::string out;
    while (true) {
        if (c.done()) throw ParseError(std::string("unterminated ") + what, start);
        const char ch = c.advance();
        if (ch == quote) {
            if (c.peek() == quote) {
                out.push_back(quote);
                c.advance();
                continue;
            }
            return out;
        }
        out.push_back(ch);
    }
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    Cursor c(text);
    while (skip_trivia(c)) {
        Token tok;
        tok.pos = c.pos();
        const char ch = c.peek();
        if (is_word_start(ch)) {
            tok.kind = TokenKind::word;
            while (!c.done() && is_word_char(c.peek())) tok.raw.push_back(c.advance());
            for (char w : tok.raw) tok.text.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(w))));
        } else if (ch == '"') {
            tok.kind = TokenKind::quoted_ident;
            tok.text = read_quoted(c, '"', "quoted identifier");
            tok.raw = tok.text;
        } else if (ch == '\'') {
            tok.kind = TokenKind::string;
            tok.text = read_quoted(c, '\'', "string literal");
            tok.raw = tok.text;
        } else if (std::isdigit(static_cast<unsigned char>(ch)) ||
                   (ch == '.' && std::isdigit(static_cast<unsigned char>(c.peek(1))))) {
            tok.kind = TokenKind::number;
            while (!c.done() && (std::isdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '.'))
                tok.text.push_back(c.advance());
            if (c.peek() == 'e' || c.peek() == 'E') {
                const char sign = c.peek(1);
                const bool has_sign = sign == '+' || sign == '-';
                if (std::isdigit(static_cast<unsigned char>(c.peek(has_sign ? 2 : 1)))) {
                    tok.text.push_back(c.advance());
                    if (has_sign) tok.text.push_back(c.advance());
                    while (!c.done() && std::isdigit(static_cast<unsigned char>(c.peek()))) tok.text.push_back(c.advance());
                }
            }
            if (tok.text.find('.') != tok.text.rfind('.')) throw ParseError("malformed number '" + tok.text + "'", tok.pos);
            if (is_word_start(c.peek())) throw ParseError("malformed number", tok.pos);
            tok.raw = tok.text;
        } else {
            tok.kind = TokenKind::symbol;
            const char next = c.peek(1);
            if ((ch == '<' && (next == '=' || next == '>')) || (ch == '>' && next == '=') || (ch == '!' && next == '=')) {
                tok.text = {ch, next};
                c.advance();
                c.advance();
            } else if (std::string_view("(),;*=<>+-/").find(ch) != std::string_view::npos) {
                tok.text = std::string(1, ch);
                c.advance();
            } else {
                throw ParseError(std::string("unexpected character '") + ch + "'", tok.pos);
            }
            tok.raw = tok.text;
        }
        tokens.push_back(std::move(tok));
    }
    Token end;
    end.kind = TokenKind::end;
    end.pos = c.pos();
    tokens.push_back(end);
    return tokens;
}

std::vector<StatementText> split_statements(std::string_view script) {
    std::vector<StatementText> out;
    Cursor c(script);
    std::size_t depth = 0;
    std::size_t begin = 0;
    SourcePos begin_pos = c.pos();
    bool has_content = false;
    auto flush = [&](std::size_t end) {
        if (has_content) out.push_back({std::string(script.substr(begin, end - begin)), begin_pos});
        has_content = false;
    };
    while (!c.done()) {
        if (!has_content) {
            if (!skip_trivia(c)) break;
            begin = c.pos().offset;
            begin_pos = c.pos();
        }
        const char ch = c.peek();
        if (ch == '\'' || ch == '"') {
            read_quoted(c, ch, ch == '"' ? "quoted identifier" : "string literal");
            has_content = true;
        } else if (ch == '-' && c.peek(1) == '-') {
            while (!c.done() && c.peek() != '\n') c.advance();
        } else if (ch == ';' && depth == 0) {
            flush(c.pos().offset);
            c.advance();
        } else {
            if (ch == '(') ++depth;
            if (ch == ')' && depth > 0) --depth;
            if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n' && ch != ';') has_content = true;
            c.advance();
        }
    }
    flush(script.size());
    return out;
}

std::string describe(const Token& token) {
    switch (token.kind) {
        case TokenKind::end: return "end of input";
        case TokenKind::word: return token.raw;
        case TokenKind::quoted_ident: return "\"" + token.text + "\"";
        case TokenKind::string: return "'" + token.text + "'";
        case TokenKind::number: return token.text;
        case TokenKind::symbol: return "'" + token.text + "'";
    }
    return "token";
}

}  // namespace relquery::bql
