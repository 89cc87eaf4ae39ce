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
#include "relquery/bql/parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "relquery/errors.hpp"

namespace relquery::bql {

namespace {

// Words that cannot be used as bare identifiers.
const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "SELECT", "ESTIMATE", "FROM", "WHERE", "ORDER", "BY", "ASC", "DESC", "LIMIT", "AND", "OR", "NOT",
        "IS", "IN", "LIKE", "AS", "TO", "EXISTING", "HYPOTHETICAL", "ROW", "ROWS", "WITH", "VALUES", "CONTEXT",
        "THE", "OF", "RELEVANCE", "PREDICTIVE", "PROBABILITY", "DEPENDENCE", "NULL", "CREATE", "TABLE",
        "POPULATION", "FOR", "SCHEMA", "GUESS", "STATISTICAL", "TYPES", "SET", "STATTYPES", "STATTYPE",
        "METAMODEL", "BASELINE", "INITIALIZE", "MODELS", "MODEL", "ANALYZE", "PAIRWISE", "VARIABLES", "KEY",
        "AVG", "SUM", "MIN", "MAX", "COUNT"};
    return words;
}

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

    Statement statement() {
        Statement out = statement_body();
        accept_symbol(";");
        if (peek().kind != TokenKind::end) fail({"end of statement"});
        return out;
    }

private:
    // --- token helpers -----------------------------------------------------

    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(i_ + ahead, tokens_.size() - 1)];
    }
    const Token& next() {
        const Token& tok = tokens_[i_];
        if (i_ + 1 < tokens_.size()) ++i_;
        return tok;
    }
    bool is_word(std::string_view w, std::size_t ahead = 0) const {
        return peek(ahead).kind == TokenKind::word && peek(ahead).text == w;
    }
    bool is_symbol(std::string_view s, std::size_t ahead = 0) const {
        return peek(ahead).kind == TokenKind::symbol && peek(ahead).text == s;
    }
    bool accept_word(std::string_view w) {
        if (!is_word(w)) return false;
        next();
        return true;
    }
    bool accept_symbol(std::string_view s) {
        if (!is_symbol(s)) return false;
        next();
        return true;
    }
    [[noreturn]] void fail(std::vector<std::string> expected) const {
        throw ParseError("unexpected " + describe(peek()), peek().pos, std::move(expected));
    }
    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail({std::string(w)});
    }
    void expect_symbol(std::string_view s) {
        if (!accept_symbol(s)) fail({"'" + std::string(s) + "'"});
    }

    // Quoted identifier or non-reserved bare word.
    bool at_name() const {
        const Token& t = peek();
        return t.kind == TokenKind::quoted_ident ||
               (t.kind == TokenKind::word && !reserved_words().count(t.text));
    }
    std::string name(const char* what) {
        if (!at_name()) fail({what});
        const Token& t = next();
        return t.kind == TokenKind::quoted_ident ? t.text : t.raw;
    }

    // Table, population, metamodel and baseline names may also be soft
    // keywords such as POPULATION; only clause words are excluded.
    std::string object_name(const char* what) {
        static const std::set<std::string, std::less<>> clause = {"SELECT", "ESTIMATE", "FROM", "WHERE", "ORDER",
                                                                  "BY",     "LIMIT",    "WITH", "FOR",   "AS",
                                                                  "IF",     "AND",      "OR",   "NOT",   "IN",
                                                                  "IS",     "LIKE",     "NULL", "TO",    "OF"};
        const Token& t = peek();
        if (t.kind == TokenKind::word && !clause.count(t.text)) return next().raw;
        return name(what);
    }

    std::uint64_t unsigned_integer(const char* what) {
        if (peek().kind != TokenKind::number) fail({what});
        const Token& t = next();
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
            throw ParseError(std::string(what) + " must be a non-negative integer", t.pos);
        return v;
    }

    double number_value(const Token& t) {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
            throw ParseError("malformed number '" + t.text + "'", t.pos);
        return v;
    }

    // Signed number, string or NULL.
    std::optional<LiteralValue> literal_value() {
        if (peek().kind == TokenKind::string) return LiteralValue(next().text);
        if (peek().kind == TokenKind::number) return LiteralValue(number_value(next()));
        if (is_symbol("-") && peek(1).kind == TokenKind::number) {
            next();
            return LiteralValue(-number_value(next()));
        }
        if (accept_word("NULL")) return LiteralValue(Null{});
        return std::nullopt;
    }

    // --- statements -----------------------------------------------------------

    Statement statement_body() {
        if (is_word("SELECT")) return select();
        if (is_word("ESTIMATE")) {
            if (is_word("DEPENDENCE", 1) && is_word("PROBABILITY", 2) && is_word("FROM", 3)) return pairwise();
            return select();
        }
        if (is_word("CREATE")) {
            if (is_word("TABLE", 1)) return create_table();
            if (is_word("POPULATION", 1)) return create_population();
            if (is_word("METAMODEL", 1)) return create_metamodel();
            next();
            fail({"TABLE", "POPULATION", "METAMODEL"});
        }
        if (is_word("INITIALIZE")) return initialize();
        if (is_word("ANALYZE")) return analyze();
        fail({"SELECT", "ESTIMATE", "CREATE", "INITIALIZE", "ANALYZE"});
    }

    SelectStmt select() {
        SelectStmt s;
        s.estimate = next().text == "ESTIMATE";
        do {
            if (is_word("FROM") && !s.items.empty()) break;  // trailing comma
            SelectItem item;
            if (!accept_symbol("*")) item.expr = expr();
            if (accept_word("AS")) item.alias = name("alias");
            s.items.push_back(std::move(item));
        } while (accept_symbol(","));
        expect_word("FROM");
        s.source = object_name("table or population name");
        if (accept_word("WHERE")) s.where = expr();
        if (accept_word("ORDER")) {
            expect_word("BY");
            do {
                OrderItem item{expr()};
                if (accept_word("DESC")) {
                    item.descending = true;
                    item.explicit_direction = true;
                } else if (accept_word("ASC")) {
                    item.explicit_direction = true;
                }
                s.order_by.push_back(std::move(item));
            } while (accept_symbol(","));
        }
        if (accept_word("LIMIT")) s.limit = unsigned_integer("LIMIT count");
        return s;
    }

    EstimatePairwiseDependence pairwise() {
        expect_word("ESTIMATE");
        expect_word("DEPENDENCE");
        expect_word("PROBABILITY");
        expect_word("FROM");
        expect_word("PAIRWISE");
        expect_word("VARIABLES");
        expect_word("OF");
        return {object_name("population name")};
    }

    CreateTable create_table() {
        expect_word("CREATE");
        expect_word("TABLE");
        CreateTable s;
        s.name = object_name("table name");
        expect_word("FROM");
        if (peek().kind != TokenKind::string) fail({"file path string"});
        s.path = next().text;
        if (accept_word("WITH")) {
            expect_word("KEY");
            s.key = name("key column");
        }
        return s;
    }

    CreatePopulation create_population() {
        expect_word("CREATE");
        expect_word("POPULATION");
        CreatePopulation s;
        if (!is_word("FOR")) s.name = object_name("population name");
        expect_word("FOR");
        s.table = object_name("table name");
        if (s.name.empty()) s.name = s.table;
        if (accept_word("WITH")) {
            if (accept_word("SCHEMA")) {
                expect_symbol("(");
                while (!accept_symbol(")")) {
                    if (accept_symbol(";")) continue;
                    s.schema.push_back(schema_directive());
                    if (!is_symbol(")")) expect_symbol(";");
                }
                if (accept_word("WITH")) s.baseline = baseline_clause();
            } else {
                s.baseline = baseline_clause();
            }
        }
        return s;
    }

    std::string baseline_clause() {
        expect_word("BASELINE");
        return object_name("baseline name");
    }

    std::vector<std::string> column_list() {
        std::vector<std::string> cols;
        expect_symbol("(");
        if (accept_symbol("*")) {
            expect_symbol(")");
            return cols;
        }
        do {
            cols.push_back(name("column name"));
        } while (accept_symbol(","));
        expect_symbol(")");
        return cols;
    }

    SchemaDirective schema_directive() {
        SchemaDirective d;
        if (accept_word("GUESS")) {
            d.kind = SchemaDirective::Kind::guess;
            if (accept_word("STATISTICAL")) {
                expect_word("TYPES");
            } else if (!accept_word("STATTYPES")) {
                fail({"STATISTICAL TYPES", "STATTYPES"});
            }
            if (!accept_word("FOR") && !accept_word("OF")) fail({"FOR", "OF"});
            d.columns = column_list();
            return d;
        }
        if (accept_word("SET")) {
            d.kind = SchemaDirective::Kind::set_type;
            if (!accept_word("STATTYPES") && !accept_word("STATTYPE")) fail({"STATTYPES"});
            expect_word("OF");
            do {
                d.columns.push_back(name("column name"));
            } while (accept_symbol(","));
            expect_word("TO");
            if (peek().kind != TokenKind::word) fail({"statistical type"});
            d.type = next().raw;
            for (auto& ch : d.type) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (accept_symbol("(")) {
                d.type += "(" + std::to_string(unsigned_integer("arity")) + ")";
                expect_symbol(")");
            }
            return d;
        }
        fail({"GUESS", "SET"});
    }

    CreateMetamodel create_metamodel() {
        expect_word("CREATE");
        expect_word("METAMODEL");
        CreateMetamodel s;
        s.name = object_name("metamodel name");
        expect_word("FOR");
        s.population = object_name("population name");
        expect_word("WITH");
        s.baseline = baseline_clause();
        return s;
    }

    InitializeModels initialize() {
        expect_word("INITIALIZE");
        InitializeModels s;
        s.count = unsigned_integer("model count");
        if (!accept_word("MODELS") && !accept_word("MODEL")) fail({"MODELS"});
        if (accept_word("IF")) {
            expect_word("NOT");
            if (!(peek().kind == TokenKind::word && peek().text == "EXISTS")) fail({"EXISTS"});
            next();
        }
        expect_word("FOR");
        s.target = object_name("population or metamodel name");
        return s;
    }

    Analyze analyze() {
        expect_word("ANALYZE");
        Analyze s;
        s.target = object_name("population or metamodel name");
        expect_word("FOR");
        if (peek().kind != TokenKind::number) fail({"amount"});
        s.amount = number_value(next());
        const Token& unit = peek();
        if (unit.kind == TokenKind::word && (unit.text == "ITERATION" || unit.text == "ITERATIONS")) {
            s.unit = AnalyzeUnit::iterations;
        } else if (unit.kind == TokenKind::word && (unit.text == "SECOND" || unit.text == "SECONDS")) {
            s.unit = AnalyzeUnit::seconds;
        } else if (unit.kind == TokenKind::word && (unit.text == "MINUTE" || unit.text == "MINUTES")) {
            s.unit = AnalyzeUnit::minutes;
        } else {
            fail({"ITERATIONS", "SECONDS", "MINUTES"});
        }
        next();
        if (s.unit == AnalyzeUnit::iterations && s.amount != std::floor(s.amount))
            throw ParseError("iteration count must be an integer", unit.pos);
        if (peek().kind == TokenKind::word && peek().text == "WAIT") {
            next();
            s.wait = true;
        }
        return s;
    }

    // --- expressions ------------------------------------------------------------

    Expr expr() { return or_expr(); }

    static Expr make_binary(BinaryOp op, Expr lhs, Expr rhs) {
        return Expr{Binary{op, Box<Expr>(std::move(lhs)), Box<Expr>(std::move(rhs))}};
    }

    Expr or_expr() {
        Expr lhs = and_expr();
        while (accept_word("OR")) lhs = make_binary(BinaryOp::logical_or, std::move(lhs), and_expr());
        return lhs;
    }

    Expr and_expr() {
        Expr lhs = not_expr();
        while (accept_word("AND")) lhs = make_binary(BinaryOp::logical_and, std::move(lhs), not_expr());
        return lhs;
    }

    Expr not_expr() {
        if (accept_word("NOT")) return Expr{Unary{UnaryOp::logical_not, Box<Expr>(not_expr())}};
        return predicate();
    }

    Expr predicate() {
        Expr lhs = additive();
        static const std::pair<const char*, BinaryOp> comparisons[] = {
            {"=", BinaryOp::eq}, {"!=", BinaryOp::ne}, {"<>", BinaryOp::ne}, {"<", BinaryOp::lt},
            {"<=", BinaryOp::le}, {">", BinaryOp::gt}, {">=", BinaryOp::ge}};
        for (const auto& [sym, op] : comparisons) {
            if (accept_symbol(sym)) return make_binary(op, std::move(lhs), additive());
        }
        if (accept_word("IS")) {
            const bool negated = accept_word("NOT");
            return make_binary(negated ? BinaryOp::is_not : BinaryOp::is, std::move(lhs), additive());
        }
        bool negated = false;
        if (is_word("NOT") && (is_word("LIKE", 1) || is_word("IN", 1))) {
            next();
            negated = true;
        }
        if (accept_word("LIKE")) return Expr{Like{Box<Expr>(std::move(lhs)), Box<Expr>(additive()), negated}};
        if (accept_word("IN")) {
            InList in;
            in.operand = Box<Expr>(std::move(lhs));
            in.negated = negated;
            expect_symbol("(");
            if (is_word("SELECT") || is_word("ESTIMATE")) {
                in.subquery = Box<SelectStmt>(select());
            } else {
                do {
                    if (is_symbol(")") && !in.items.empty()) break;  // trailing comma
                    in.items.push_back(expr());
                } while (accept_symbol(","));
            }
            expect_symbol(")");
            return Expr{std::move(in)};
        }
        if (negated) fail({"LIKE", "IN"});
        return lhs;
    }

    Expr additive() {
        Expr lhs = multiplicative();
        while (true) {
            if (accept_symbol("+"))
                lhs = make_binary(BinaryOp::add, std::move(lhs), multiplicative());
            else if (accept_symbol("-"))
                lhs = make_binary(BinaryOp::sub, std::move(lhs), multiplicative());
            else
                return lhs;
        }
    }

    Expr multiplicative() {
        Expr lhs = unary();
        while (true) {
            if (accept_symbol("*"))
                lhs = make_binary(BinaryOp::mul, std::move(lhs), unary());
            else if (accept_symbol("/"))
                lhs = make_binary(BinaryOp::div, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        if (is_symbol("-") && peek(1).kind == TokenKind::number) {
            next();
            return Expr{Literal{-number_value(next())}};
        }
        if (accept_symbol("-")) return Expr{Unary{UnaryOp::negate, Box<Expr>(unary())}};
        return primary();
    }

    Expr primary() {
        const Token& t = peek();
        if (t.kind == TokenKind::number) return Expr{Literal{number_value(next())}};
        if (t.kind == TokenKind::string) return Expr{Literal{next().text}};
        if (accept_word("NULL")) return Expr{Literal{Null{}}};
        if (accept_symbol("(")) {
            Expr inner = expr();
            expect_symbol(")");
            return inner;
        }
        if (is_word("RELEVANCE") || (is_word("PREDICTIVE") && is_word("RELEVANCE", 1))) return relevance();
        if (is_word("DEPENDENCE")) return dependence();
        for (auto [word, kind] : {std::pair{"AVG", AggregateKind::avg}, std::pair{"SUM", AggregateKind::sum},
                                  std::pair{"MIN", AggregateKind::min}, std::pair{"MAX", AggregateKind::max},
                                  std::pair{"COUNT", AggregateKind::count}}) {
            if (is_word(word) && is_symbol("(", 1)) {
                next();
                next();
                Aggregate agg;
                agg.kind = kind;
                if (!(kind == AggregateKind::count && accept_symbol("*"))) agg.arg = Box<Expr>(expr());
                expect_symbol(")");
                return Expr{std::move(agg)};
            }
        }
        if (at_name()) return Expr{ColumnRef{name("column")}};
        fail({"expression"});
    }

    Expr relevance() {
        accept_word("PREDICTIVE");
        expect_word("RELEVANCE");
        expect_word("PROBABILITY");
        // TO is optional: some written queries go straight to EXISTING ROW.
        if (!accept_word("TO") && !is_word("EXISTING") && !is_word("HYPOTHETICAL")) fail({"TO"});
        RelevanceExpr rel;
        if (accept_word("EXISTING")) {
            if (!accept_word("ROWS") && !accept_word("ROW")) fail({"ROWS"});
            accept_word("IN");
            rel.existing = row_set();
            if (is_word("AND") && is_word("HYPOTHETICAL", 1)) {
                next();
                next();
                rel.hypothetical = hypothetical_rows();
            }
        } else if (accept_word("HYPOTHETICAL")) {
            rel.hypothetical = hypothetical_rows();
        } else {
            fail({"EXISTING", "HYPOTHETICAL"});
        }
        expect_word("IN");
        expect_word("THE");
        expect_word("CONTEXT");
        expect_word("OF");
        rel.context = name("context column");
        return Expr{std::move(rel)};
    }

    RowSet row_set() {
        RowSet set;
        expect_symbol("(");
        if (is_word("SELECT") || is_word("ESTIMATE")) {
            set.subquery = Box<SelectStmt>(select());
            expect_symbol(")");
            return set;
        }
        // Keys may be wrapped in a second pair of parentheses.
        const bool doubled = accept_symbol("(");
        do {
            if (is_symbol(")") && !set.keys.empty()) break;  // trailing comma
            auto v = literal_value();
            if (!v || std::holds_alternative<Null>(*v)) fail({"row key"});
            set.keys.push_back(std::move(*v));
        } while (accept_symbol(","));
        if (doubled) expect_symbol(")");
        expect_symbol(")");
        return set;
    }

    std::vector<Assignment> assignments() {
        std::vector<Assignment> row;
        while (at_name()) {
            Assignment a;
            a.column = name("column name");
            expect_symbol("=");
            auto v = literal_value();
            if (!v) fail({"value"});
            a.value = std::move(*v);
            row.push_back(std::move(a));
            accept_symbol(",");  // separators between assignments are optional
        }
        if (row.empty()) fail({"column = value"});
        return row;
    }

    std::vector<std::vector<Assignment>> hypothetical_rows() {
        if (!accept_word("ROWS") && !accept_word("ROW")) fail({"ROW", "ROWS"});
        if (accept_word("WITH")) expect_word("VALUES");
        std::vector<std::vector<Assignment>> rows;
        do {
            expect_symbol("(");
            if (is_symbol("(")) {
                do {
                    if (is_symbol(")")) break;
                    expect_symbol("(");
                    rows.push_back(assignments());
                    expect_symbol(")");
                } while (accept_symbol(","));
            } else {
                rows.push_back(assignments());
            }
            expect_symbol(")");
        } while (is_symbol(",") && is_symbol("(", 1) && (accept_symbol(","), true));
        return rows;
    }

    Expr dependence() {
        expect_word("DEPENDENCE");
        expect_word("PROBABILITY");
        DependenceExpr dep;
        expect_word("OF");
        dep.column1 = name("column name");
        expect_word("WITH");
        dep.column2 = name("column name");
        return Expr{std::move(dep)};
    }

    std::vector<Token> tokens_;
    std::size_t i_ = 0;
};

// --- printing -----------------------------------------------------------------

std::string print_literal(const LiteralValue& v) {
    if (std::holds_alternative<Null>(v)) return "NULL";
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    return quote_string(std::get<std::string>(v));
}

bool bare_ok(std::string_view name) {
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    std::string upper;
    for (char ch : name) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
        upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    return !reserved_words().count(upper);
}

std::string print_name(std::string_view name) { return bare_ok(name) ? std::string(name) : quote_ident(name); }

int precedence(const Expr& e) {
    if (const auto* b = std::get_if<Binary>(&e.node)) {
        switch (b->op) {
            case BinaryOp::logical_or: return 1;
            case BinaryOp::logical_and: return 2;
            case BinaryOp::add:
            case BinaryOp::sub: return 5;
            case BinaryOp::mul:
            case BinaryOp::div: return 6;
            default: return 4;
        }
    }
    if (const auto* u = std::get_if<Unary>(&e.node)) return u->op == UnaryOp::logical_not ? 3 : 7;
    if (std::holds_alternative<Like>(e.node) || std::holds_alternative<InList>(e.node)) return 4;
    if (const auto* l = std::get_if<Literal>(&e.node)) {
        // A negative literal behaves like unary minus.
        if (const auto* d = std::get_if<double>(&l->value); d && std::signbit(*d)) return 7;
    }
    return 9;
}

std::string print_expr(const Expr& e);

// Operand printing: parenthesize when the child binds looser than required.
std::string operand(const Expr& child, int required) {
    const std::string s = print_expr(child);
    return precedence(child) < required ? "(" + s + ")" : s;
}

const char* binary_text(BinaryOp op) {
    switch (op) {
        case BinaryOp::logical_or: return "OR";
        case BinaryOp::logical_and: return "AND";
        case BinaryOp::eq: return "=";
        case BinaryOp::ne: return "!=";
        case BinaryOp::lt: return "<";
        case BinaryOp::le: return "<=";
        case BinaryOp::gt: return ">";
        case BinaryOp::ge: return ">=";
        case BinaryOp::is: return "IS";
        case BinaryOp::is_not: return "IS NOT";
        case BinaryOp::add: return "+";
        case BinaryOp::sub: return "-";
        case BinaryOp::mul: return "*";
        case BinaryOp::div: return "/";
    }
    return "?";
}

std::string print_select(const SelectStmt& s);

std::string print_expr(const Expr& e) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Literal>) {
                return print_literal(n.value);
            } else if constexpr (std::is_same_v<T, ColumnRef>) {
                return quote_ident(n.name);
            } else if constexpr (std::is_same_v<T, Unary>) {
                if (n.op == UnaryOp::logical_not) return "NOT " + operand(*n.operand, 3);
                return "-" + operand(*n.operand, 8);
            } else if constexpr (std::is_same_v<T, Binary>) {
                const int p = precedence(e);
                // Comparisons do not chain; arithmetic is left-associative.
                const int left = p == 4 ? 5 : p;
                const int right = p + 1;
                return operand(*n.lhs, left) + " " + binary_text(n.op) + " " + operand(*n.rhs, right);
            } else if constexpr (std::is_same_v<T, Like>) {
                return operand(*n.operand, 5) + (n.negated ? " NOT LIKE " : " LIKE ") + operand(*n.pattern, 5);
            } else if constexpr (std::is_same_v<T, InList>) {
                std::string out = operand(*n.operand, 5) + (n.negated ? " NOT IN (" : " IN (");
                if (n.subquery) {
                    out += print_select(*n.subquery);
                } else {
                    for (std::size_t i = 0; i < n.items.size(); ++i) out += (i ? ", " : "") + print_expr(n.items[i]);
                }
                return out + ")";
            } else if constexpr (std::is_same_v<T, Aggregate>) {
                static const char* names[] = {"AVG", "SUM", "MIN", "MAX", "COUNT"};
                return std::string(names[static_cast<int>(n.kind)]) + "(" + (n.arg ? print_expr(*n.arg) : "*") + ")";
            } else if constexpr (std::is_same_v<T, RelevanceExpr>) {
                std::string out = "RELEVANCE PROBABILITY TO ";
                if (n.existing) {
                    out += "EXISTING ROWS IN (";
                    if (n.existing->subquery) {
                        out += print_select(*n.existing->subquery);
                    } else {
                        for (std::size_t i = 0; i < n.existing->keys.size(); ++i)
                            out += (i ? ", " : "") + print_literal(n.existing->keys[i]);
                    }
                    out += ")";
                    if (!n.hypothetical.empty()) out += " AND ";
                }
                if (!n.hypothetical.empty()) {
                    out += n.hypothetical.size() == 1 ? "HYPOTHETICAL ROW WITH VALUES (" : "HYPOTHETICAL ROWS WITH VALUES (";
                    for (std::size_t r = 0; r < n.hypothetical.size(); ++r) {
                        out += r ? ", (" : "(";
                        for (std::size_t i = 0; i < n.hypothetical[r].size(); ++i) {
                            const auto& a = n.hypothetical[r][i];
                            out += (i ? ", " : "") + quote_ident(a.column) + " = " + print_literal(a.value);
                        }
                        out += ")";
                    }
                    out += ")";
                }
                return out + " IN THE CONTEXT OF " + quote_ident(n.context);
            } else {
                return "DEPENDENCE PROBABILITY OF " + quote_ident(n.column1) + " WITH " + quote_ident(n.column2);
            }
        },
        e.node);
}

std::string print_select(const SelectStmt& s) {
    std::string out = s.estimate ? "ESTIMATE " : "SELECT ";
    for (std::size_t i = 0; i < s.items.size(); ++i) {
        if (i) out += ", ";
        const auto& item = s.items[i];
        out += item.expr ? print_expr(*item.expr) : "*";
        if (item.alias) out += " AS " + quote_ident(*item.alias);
    }
    out += " FROM " + print_name(s.source);
    if (s.where) out += " WHERE " + print_expr(*s.where);
    if (!s.order_by.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < s.order_by.size(); ++i) {
            if (i) out += ", ";
            out += print_expr(s.order_by[i].expr);
            if (s.order_by[i].explicit_direction) out += s.order_by[i].descending ? " DESC" : " ASC";
        }
    }
    if (s.limit) out += " LIMIT " + std::to_string(*s.limit);
    return out;
}

}  // namespace

Statement parse_statement(std::string_view text) { return Parser(text).statement(); }

std::vector<Statement> parse_script(std::string_view text) {
    std::vector<Statement> out;
    for (const auto& st : split_statements(text)) {
        try {
            out.push_back(parse_statement(st.text));
        } catch (const ParseError& e) {
            // Re-anchor the position to the whole script.
            SourcePos pos = e.pos();
            if (pos.line == 1) pos.column += st.pos.column - 1;
            pos.line += st.pos.line - 1;
            pos.offset += st.pos.offset;
            throw ParseError(e.detail(), pos, e.expected());
        }
    }
    return out;
}

std::string quote_ident(std::string_view name) {
    std::string out = "\"";
    for (char ch : name) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    return out + "\"";
}

std::string quote_string(std::string_view text) {
    std::string out = "'";
    for (char ch : text) {
        if (ch == '\'') out.push_back('\'');
        out.push_back(ch);
    }
    return out + "'";
}

std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::string to_string(const Expr& expr) { return print_expr(expr); }
std::string to_string(const SelectStmt& select) { return print_select(select); }

std::string to_string(const Statement& statement) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SelectStmt>) {
                return print_select(s);
            } else if constexpr (std::is_same_v<T, CreateTable>) {
                std::string out = "CREATE TABLE " + print_name(s.name) + " FROM " + quote_string(s.path);
                if (s.key) out += " WITH KEY " + quote_ident(*s.key);
                return out;
            } else if constexpr (std::is_same_v<T, CreatePopulation>) {
                std::string out = "CREATE POPULATION " + print_name(s.name) + " FOR " + print_name(s.table);
                if (!s.schema.empty()) {
                    out += " WITH SCHEMA (";
                    for (const auto& d : s.schema) {
                        if (d.kind == SchemaDirective::Kind::guess) {
                            out += " GUESS STATISTICAL TYPES FOR (";
                            if (d.columns.empty()) out += "*";
                            for (std::size_t i = 0; i < d.columns.size(); ++i)
                                out += (i ? ", " : "") + quote_ident(d.columns[i]);
                            out += ");";
                        } else {
                            out += " SET STATTYPES OF ";
                            for (std::size_t i = 0; i < d.columns.size(); ++i)
                                out += (i ? ", " : "") + quote_ident(d.columns[i]);
                            out += " TO " + d.type + ";";
                        }
                    }
                    out += " )";
                }
                if (s.baseline) out += " WITH BASELINE " + print_name(*s.baseline);
                return out;
            } else if constexpr (std::is_same_v<T, CreateMetamodel>) {
                return "CREATE METAMODEL " + print_name(s.name) + " FOR " + print_name(s.population) +
                       " WITH BASELINE " + print_name(s.baseline);
            } else if constexpr (std::is_same_v<T, InitializeModels>) {
                return "INITIALIZE " + std::to_string(s.count) + " MODELS FOR " + print_name(s.target);
            } else if constexpr (std::is_same_v<T, Analyze>) {
                static const char* units[] = {"ITERATIONS", "SECONDS", "MINUTES"};
                return "ANALYZE " + print_name(s.target) + " FOR " + format_number(s.amount) + " " +
                       units[static_cast<int>(s.unit)] + (s.wait ? " WAIT" : "");
            } else {
                return "ESTIMATE DEPENDENCE PROBABILITY FROM PAIRWISE VARIABLES OF " + print_name(s.population);
            }
        },
        statement);
}

}  // namespace relquery::bql
