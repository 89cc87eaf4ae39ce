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
#include "relquery/bql/session.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "relquery/bql/parser.hpp"
#include "relquery/errors.hpp"

namespace relquery::bql {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

// Exact match first, then a unique case-insensitive match.
template <class Map>
auto find_name(Map& map, std::string_view name) -> decltype(map.begin()) {
    auto it = map.find(std::string(name));
    if (it != map.end()) return it;
    auto found = map.end();
    for (auto i = map.begin(); i != map.end(); ++i) {
        if (lower(i->first) == lower(name)) {
            if (found != map.end()) return map.end();
            found = i;
        }
    }
    return found;
}

std::optional<std::size_t> find_column(const DataTable& data, std::string_view name) {
    if (auto c = data.find_column(name)) return c;
    std::optional<std::size_t> found;
    for (std::size_t c = 0; c < data.num_cols(); ++c) {
        if (lower(data.column(c).name) == lower(name)) {
            if (found) return std::nullopt;
            found = c;
        }
    }
    return found;
}

std::size_t require_column(const DataTable& data, std::string_view name) {
    if (auto c = find_column(data, name)) return *c;
    if (data.has_key() && lower(data.key_name()) == lower(name))
        throw QueryError("key column \"" + std::string(name) + "\" is not a modeled variable");
    throw QueryError("unknown column \"" + std::string(name) + "\"");
}

std::string key_text(const LiteralValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return {};
}

std::optional<double> as_number(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* s = std::get_if<std::string>(&v)) return parse_number(*s);
    return std::nullopt;
}

Value from_literal(const LiteralValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return std::monostate{};
}

bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

Value boolean(bool b) { return b ? 1.0 : 0.0; }

// Three-valued truth: nullopt for NULL.
std::optional<bool> truth(const Value& v) {
    if (is_null(v)) return std::nullopt;
    if (const auto* d = std::get_if<double>(&v)) return *d != 0.0 && !std::isnan(*d);
    return !std::get<std::string>(v).empty();
}

// Equality between non-null values; a string that reads as a number
// compares numerically against a number.
bool values_equal(const Value& a, const Value& b) {
    if (a.index() == b.index()) return a == b;
    const auto x = as_number(a);
    const auto y = as_number(b);
    return x && y && *x == *y;
}

// Ordering between non-null values; throws for text that cannot be compared
// with a number.
int compare_values(const Value& a, const Value& b) {
    if (const auto* s = std::get_if<std::string>(&a); s && std::holds_alternative<std::string>(b)) {
        const int c = s->compare(std::get<std::string>(b));
        return (c > 0) - (c < 0);
    }
    const auto x = as_number(a);
    const auto y = as_number(b);
    if (!x || !y)
        throw QueryError("cannot compare '" + format_value(a, false) + "' with '" + format_value(b, false) + "'");
    return (*x > *y) - (*x < *y);
}

bool like_match(std::string_view text, std::string_view pattern) {
    // Greedy wildcard match with backtracking over the last `%`.
    std::size_t t = 0, p = 0, star = std::string_view::npos, mark = 0;
    auto eq = [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
    };
    while (t < text.size()) {
        if (p < pattern.size() && pattern[p] == '%') {
            star = p++;
            mark = t;
        } else if (p < pattern.size() && eq(pattern[p], text[t])) {
            ++p;
            ++t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '%') ++p;
    return p == pattern.size();
}

bool is_aggregate(const Expr& e) { return std::holds_alternative<Aggregate>(e.node); }

bool contains_aggregate(const Expr& e) {
    return std::visit(
        [](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Aggregate>) {
                return true;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return contains_aggregate(*n.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return contains_aggregate(*n.lhs) || contains_aggregate(*n.rhs);
            } else if constexpr (std::is_same_v<T, Like>) {
                return contains_aggregate(*n.operand) || contains_aggregate(*n.pattern);
            } else if constexpr (std::is_same_v<T, InList>) {
                if (contains_aggregate(*n.operand)) return true;
                return std::any_of(n.items.begin(), n.items.end(), [](const Expr& x) { return contains_aggregate(x); });
            } else {
                return false;
            }
        },
        e.node);
}

std::string header_of(const Expr& e) {
    if (const auto* c = std::get_if<ColumnRef>(&e.node)) return c->name;
    if (std::holds_alternative<RelevanceExpr>(e.node)) return "relevance_probability";
    if (std::holds_alternative<DependenceExpr>(e.node)) return "dependence_probability";
    if (const auto* a = std::get_if<Aggregate>(&e.node)) {
        static const char* names[] = {"avg", "sum", "min", "max", "count"};
        return std::string(names[static_cast<int>(a->kind)]) + "(" + (a->arg ? header_of(*a->arg) : "*") + ")";
    }
    return to_string(e);
}

bool is_probability(const Expr& e) {
    if (std::holds_alternative<RelevanceExpr>(e.node) || std::holds_alternative<DependenceExpr>(e.node)) return true;
    if (const auto* a = std::get_if<Aggregate>(&e.node)) {
        return a->arg && a->kind != AggregateKind::sum && a->kind != AggregateKind::count && is_probability(*a->arg);
    }
    return false;
}

}  // namespace

// --- evaluation -------------------------------------------------------------------

/// Evaluates the expressions of one SELECT against one data table.
class Evaluator {
public:
    Evaluator(const Session& session, const DataTable& data, const Population* pop, std::vector<std::string>& warnings)
        : session_(session), data_(data), pop_(pop), warnings_(warnings) {}

    // Computes every relevance, dependence and subquery once.
    void prepare(const Expr& e) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, RelevanceExpr>) {
                    const std::string k = to_string(e);
                    if (!relevance_.count(k)) relevance_[k] = relevance(n);
                } else if constexpr (std::is_same_v<T, DependenceExpr>) {
                    const std::string k = to_string(e);
                    if (!dependence_.count(k)) {
                        const Ensemble& ens = ensemble("DEPENDENCE PROBABILITY");
                        dependence_[k] = dependence_probability(ens, require_column(data_, n.column1),
                                                                require_column(data_, n.column2));
                    }
                } else if constexpr (std::is_same_v<T, Unary>) {
                    prepare(*n.operand);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    prepare(*n.lhs);
                    prepare(*n.rhs);
                } else if constexpr (std::is_same_v<T, Like>) {
                    prepare(*n.operand);
                    prepare(*n.pattern);
                } else if constexpr (std::is_same_v<T, InList>) {
                    prepare(*n.operand);
                    for (const auto& x : n.items) prepare(x);
                    if (n.subquery) {
                        const std::string k = to_string(*n.subquery);
                        if (!subqueries_.count(k)) subqueries_[k] = subquery_values(*n.subquery);
                    }
                } else if constexpr (std::is_same_v<T, Aggregate>) {
                    if (n.arg) prepare(*n.arg);
                } else if constexpr (std::is_same_v<T, ColumnRef>) {
                    resolve(n.name);
                }
            },
            e.node);
    }

    Value eval(const Expr& e, RowId row) const {
        return std::visit(
            [&](const auto& n) -> Value {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    return from_literal(n.value);
                } else if constexpr (std::is_same_v<T, ColumnRef>) {
                    return column_value(n.name, row);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    const Value v = eval(*n.operand, row);
                    if (is_null(v)) return v;
                    if (n.op == UnaryOp::logical_not) return boolean(!*truth(v));
                    return -number(v, "-");
                } else if constexpr (std::is_same_v<T, Binary>) {
                    return binary(n, row);
                } else if constexpr (std::is_same_v<T, Like>) {
                    const Value v = eval(*n.operand, row);
                    const Value p = eval(*n.pattern, row);
                    if (is_null(v) || is_null(p)) return std::monostate{};
                    return boolean(like_match(format_value(v, false), format_value(p, false)) != n.negated);
                } else if constexpr (std::is_same_v<T, InList>) {
                    const Value v = eval(*n.operand, row);
                    if (is_null(v)) return std::monostate{};
                    bool found = false;
                    if (n.subquery) {
                        for (const auto& x : subqueries_.at(to_string(*n.subquery))) found |= !is_null(x) && values_equal(v, x);
                    } else {
                        for (const auto& item : n.items) {
                            const Value x = eval(item, row);
                            found |= !is_null(x) && values_equal(v, x);
                        }
                    }
                    return boolean(found != n.negated);
                } else if constexpr (std::is_same_v<T, Aggregate>) {
                    throw QueryError("aggregate " + to_string(e) + " is only allowed in the select list");
                } else if constexpr (std::is_same_v<T, RelevanceExpr>) {
                    return relevance_.at(to_string(e)).at(row);
                } else {
                    return dependence_.at(to_string(e));
                }
            },
            e.node);
    }

    Value aggregate(const Aggregate& agg, const std::vector<RowId>& rows) const {
        if (agg.kind == AggregateKind::count && !agg.arg) return static_cast<double>(rows.size());
        std::size_t n = 0;
        double sum = 0.0;
        std::optional<Value> best;
        for (RowId r : rows) {
            const Value v = eval(*agg.arg, r);
            if (is_null(v)) continue;
            ++n;
            if (agg.kind == AggregateKind::avg || agg.kind == AggregateKind::sum) sum += number(v, "AVG/SUM");
            if (agg.kind == AggregateKind::min || agg.kind == AggregateKind::max) {
                if (!best) {
                    best = v;
                } else {
                    const int c = compare_values(v, *best);
                    if ((agg.kind == AggregateKind::min && c < 0) || (agg.kind == AggregateKind::max && c > 0)) best = v;
                }
            }
        }
        switch (agg.kind) {
            case AggregateKind::count: return static_cast<double>(n);
            case AggregateKind::sum: return n ? Value(sum) : Value(std::monostate{});
            case AggregateKind::avg: return n ? Value(sum / static_cast<double>(n)) : Value(std::monostate{});
            default: return best ? *best : Value(std::monostate{});
        }
    }

private:
    enum class Pseudo { none, rowid, key };

    struct Resolved {
        std::optional<std::size_t> column;
        Pseudo pseudo = Pseudo::none;
    };

    Resolved resolve(const std::string& name) const {
        if (auto c = find_column(data_, name)) return {c, Pseudo::none};
        if (data_.has_key() && lower(data_.key_name()) == lower(name)) return {std::nullopt, Pseudo::key};
        if (lower(name) == "rowid") return {std::nullopt, Pseudo::rowid};
        throw QueryError("unknown column \"" + name + "\"");
    }

    Value column_value(const std::string& name, RowId row) const {
        const Resolved r = resolve(name);
        if (r.pseudo == Pseudo::rowid) return static_cast<double>(row);
        if (r.pseudo == Pseudo::key) return data_.row_key(row);
        const std::size_t c = *r.column;
        if (!data_.is_present(row, c)) return std::monostate{};
        const ColumnSchema& col = data_.column(c);
        if (col.type.is_discrete()) return col.codebook.symbol(static_cast<std::uint32_t>(data_.value(row, c)));
        return data_.value(row, c);
    }

    static double number(const Value& v, const char* op) {
        if (auto x = as_number(v)) return *x;
        throw QueryError(std::string("operator ") + op + " needs a number, got '" + format_value(v, false) + "'");
    }

    Value binary(const Binary& b, RowId row) const {
        const Value lhs = eval(*b.lhs, row);
        if (b.op == BinaryOp::logical_and || b.op == BinaryOp::logical_or) {
            const auto l = truth(lhs);
            const bool is_and = b.op == BinaryOp::logical_and;
            if (l && *l != is_and) return boolean(!is_and);
            const auto r = truth(eval(*b.rhs, row));
            if (r && *r != is_and) return boolean(!is_and);
            if (!l || !r) return std::monostate{};
            return boolean(is_and);
        }
        const Value rhs = eval(*b.rhs, row);
        if (b.op == BinaryOp::is || b.op == BinaryOp::is_not) {
            bool same;
            if (is_null(lhs) || is_null(rhs))
                same = is_null(lhs) && is_null(rhs);
            else
                same = values_equal(lhs, rhs);
            return boolean(same == (b.op == BinaryOp::is));
        }
        if (is_null(lhs) || is_null(rhs)) return std::monostate{};
        switch (b.op) {
            case BinaryOp::eq: return boolean(values_equal(lhs, rhs));
            case BinaryOp::ne: return boolean(!values_equal(lhs, rhs));
            case BinaryOp::lt: return boolean(compare_values(lhs, rhs) < 0);
            case BinaryOp::le: return boolean(compare_values(lhs, rhs) <= 0);
            case BinaryOp::gt: return boolean(compare_values(lhs, rhs) > 0);
            case BinaryOp::ge: return boolean(compare_values(lhs, rhs) >= 0);
            case BinaryOp::add: return number(lhs, "+") + number(rhs, "+");
            case BinaryOp::sub: return number(lhs, "-") - number(rhs, "-");
            case BinaryOp::mul: return number(lhs, "*") * number(rhs, "*");
            case BinaryOp::div: {
                const double d = number(rhs, "/");
                if (d == 0.0) return std::monostate{};
                return number(lhs, "/") / d;
            }
            default: return std::monostate{};
        }
    }

    const Ensemble& ensemble(const char* what) const {
        if (!pop_) throw QueryError(std::string(what) + " needs a population; this source is a plain table");
        if (!pop_->ensemble || pop_->ensemble->size() == 0)
            throw QueryError(std::string(what) + " needs models: run INITIALIZE n MODELS FOR " + pop_->name);
        if (pop_->ensemble->analyze_iterations == 0 && !warned_unanalyzed_) {
            warnings_.push_back("models for " + pop_->name + " have not been analyzed; results reflect the prior");
            warned_unanalyzed_ = true;
        }
        return *pop_->ensemble;
    }

    std::vector<Value> subquery_values(const SelectStmt& sub) const {
        const ResultTable t = session_.run_select(sub);
        if (t.columns.size() != 1)
            throw QueryError("subquery must return exactly one column, got " + std::to_string(t.columns.size()));
        std::vector<Value> out;
        for (const auto& row : t.rows) out.push_back(row[0]);
        for (const auto& w : t.warnings) warnings_.push_back(w);
        return out;
    }

    RowId key_to_row(const std::string& key) const {
        if (auto r = data_.find_row(key)) return *r;
        throw QueryError("unknown row key '" + key + "'" +
                         (data_.has_key() ? " in key column \"" + data_.key_name() + "\"" : std::string(" (rowid)")));
    }

    Observation observation(const Assignment& a) const {
        const std::size_t c = require_column(data_, a.column);
        const ColumnSchema& col = data_.column(c);
        double x = 0;
        if (col.type.is_discrete()) {
            const std::string symbol = key_text(a.value);
            const auto code = col.codebook.code_of(symbol);
            if (!code) throw QueryError("'" + symbol + "' is not a category of column \"" + col.name + "\"");
            x = *code;
        } else {
            const auto v = as_number(from_literal(a.value));
            if (!v) throw QueryError("column \"" + col.name + "\" needs a number, got '" + key_text(a.value) + "'");
            x = *v;
        }
        try {
            check_cell_value(col, x);
        } catch (const SchemaError& e) {
            throw QueryError(e.what());
        }
        return {c, x};
    }

    std::vector<double> relevance(const RelevanceExpr& rel) const {
        const Ensemble& ens = ensemble("RELEVANCE PROBABILITY");
        RelevanceQuery q;
        q.context = require_column(data_, rel.context);
        if (rel.existing) {
            if (rel.existing->subquery) {
                for (const auto& v : subquery_values(*rel.existing->subquery)) {
                    if (is_null(v)) continue;
                    q.existing.push_back(key_to_row(format_value(v, false)));
                }
            } else {
                for (const auto& k : rel.existing->keys) q.existing.push_back(key_to_row(key_text(k)));
            }
        }
        for (const auto& row : rel.hypothetical) {
            std::vector<Observation> record;
            std::set<std::size_t> seen;
            for (const auto& a : row) {
                if (std::holds_alternative<Null>(a.value)) continue;
                Observation o = observation(a);
                if (!seen.insert(o.column).second)
                    throw QueryError("column \"" + a.column + "\" is assigned twice in one hypothetical row");
                record.push_back(o);
            }
            q.hypothetical.push_back(std::move(record));
        }
        if (q.existing.empty() && q.hypothetical.empty())
            throw QueryError("RELEVANCE PROBABILITY query rows are empty");
        std::sort(q.existing.begin(), q.existing.end());
        q.existing.erase(std::unique(q.existing.begin(), q.existing.end()), q.existing.end());

        const RelevanceResult res = relevance_query(ens, *pop_->cache, q);
        for (const auto& [col, count] : res.ignored_columns) {
            warnings_.push_back("hypothetical value of \"" + data_.column(col).name +
                                "\" lies outside the context block of \"" + data_.column(q.context).name + "\" in " +
                                std::to_string(count) + " of " + std::to_string(res.num_states) +
                                " models and was ignored there");
        }
        return res.probabilities();
    }

    const Session& session_;
    const DataTable& data_;
    const Population* pop_;
    std::vector<std::string>& warnings_;
    mutable bool warned_unanalyzed_ = false;
    std::map<std::string, std::vector<double>> relevance_;
    std::map<std::string, double> dependence_;
    std::map<std::string, std::vector<Value>> subqueries_;
};

// --- session ------------------------------------------------------------------------

Session::Session(SessionOptions options) : options_(std::move(options)) {}

std::uint64_t Session::seed() const {
    auto lock = read_lock();
    return options_.seed;
}

void Session::set_seed(std::uint64_t seed) {
    auto lock = write_lock();
    options_.seed = seed;
}

ResultTable Session::execute(std::string_view text) { return execute(parse_statement(text)); }

ResultTable Session::execute(const Statement& statement) {
    if (const auto* s = std::get_if<SelectStmt>(&statement)) {
        auto lock = read_lock();
        return run_select(*s);
    }
    if (const auto* s = std::get_if<EstimatePairwiseDependence>(&statement)) {
        auto lock = read_lock();
        return run_pairwise(*s);
    }
    auto lock = write_lock();
    return std::visit(
        [&](const auto& s) -> ResultTable {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CreateTable>) return run_create_table(s);
            if constexpr (std::is_same_v<T, CreatePopulation>) return run_create_population(s);
            if constexpr (std::is_same_v<T, CreateMetamodel>) return run_create_metamodel(s);
            if constexpr (std::is_same_v<T, InitializeModels>) return run_initialize(s);
            if constexpr (std::is_same_v<T, Analyze>) return run_analyze(s);
            return {};
        },
        statement);
}

ResultTable Session::run_select(const SelectStmt& select) const {
    const DataTable* data = nullptr;
    const Population* pop = nullptr;
    auto p = find_name(populations_, select.source);
    if (p == populations_.end()) {
        if (auto m = find_name(metamodels_, select.source); m != metamodels_.end()) p = populations_.find(m->second);
    }
    if (p != populations_.end()) {
        pop = &p->second;
        data = &pop->data;
    } else if (auto t = find_name(tables_, select.source); t != tables_.end()) {
        data = &t->second.data;
    } else {
        throw QueryError("unknown table or population \"" + select.source + "\"");
    }

    ResultTable out;
    Evaluator ev(*this, *data, pop, out.warnings);

    // Expand `*` and resolve ORDER BY aliases before any evaluation.
    struct Item {
        Expr expr;
        std::string header;
        bool probability;
    };
    std::vector<Item> items;
    for (const auto& item : select.items) {
        if (!item.expr) {
            if (data->has_key()) items.push_back({Expr{ColumnRef{data->key_name()}}, data->key_name(), false});
            for (const auto& col : data->columns()) items.push_back({Expr{ColumnRef{col.name}}, col.name, false});
            continue;
        }
        items.push_back({*item.expr, item.alias ? *item.alias : header_of(*item.expr), is_probability(*item.expr)});
    }
    std::vector<OrderItem> order = select.order_by;
    for (auto& o : order) {
        if (const auto* c = std::get_if<ColumnRef>(&o.expr.node)) {
            for (std::size_t i = 0; i < select.items.size(); ++i) {
                if (select.items[i].alias && select.items[i].expr && *select.items[i].alias == c->name) {
                    o.expr = *select.items[i].expr;
                    break;
                }
            }
        }
        if (contains_aggregate(o.expr)) throw QueryError("aggregates are not allowed in ORDER BY");
    }
    if (select.where && contains_aggregate(*select.where)) throw QueryError("aggregates are not allowed in WHERE");

    const bool any_agg = std::any_of(items.begin(), items.end(), [](const Item& i) { return contains_aggregate(i.expr); });
    if (any_agg) {
        for (const auto& i : items) {
            if (!is_aggregate(i.expr))
                throw QueryError("cannot mix aggregates with per-row expressions such as " + to_string(i.expr));
            if (const auto& arg = std::get<Aggregate>(i.expr.node).arg; arg && contains_aggregate(*arg))
                throw QueryError("aggregates cannot be nested");
        }
    }

    for (const auto& i : items) ev.prepare(i.expr);
    if (select.where) ev.prepare(*select.where);
    for (const auto& o : order) ev.prepare(o.expr);

    for (const auto& i : items) {
        out.columns.push_back(i.header);
        out.probability.push_back(i.probability);
    }

    std::vector<RowId> rows;
    for (RowId r = 0; r < data->num_rows(); ++r) {
        if (select.where && !truth(ev.eval(*select.where, r)).value_or(false)) continue;
        rows.push_back(r);
    }

    if (any_agg) {
        std::vector<Value> row;
        for (const auto& i : items) row.push_back(ev.aggregate(std::get<Aggregate>(i.expr.node), rows));
        if (!select.limit || *select.limit > 0) out.rows.push_back(std::move(row));
        return out;
    }

    if (!order.empty()) {
        std::vector<std::vector<Value>> keys(data->num_rows());
        for (RowId r : rows)
            for (const auto& o : order) keys[r].push_back(ev.eval(o.expr, r));
        std::stable_sort(rows.begin(), rows.end(), [&](RowId a, RowId b) {
            for (std::size_t k = 0; k < order.size(); ++k) {
                const Value& x = keys[a][k];
                const Value& y = keys[b][k];
                if (is_null(x) || is_null(y)) {
                    if (is_null(x) == is_null(y)) continue;
                    return is_null(y);  // NULLs last in either direction
                }
                const int c = compare_values(x, y);
                if (c != 0) return order[k].descending ? c > 0 : c < 0;
            }
            return false;
        });
    }
    if (select.limit && rows.size() > *select.limit) rows.resize(*select.limit);

    for (RowId r : rows) {
        std::vector<Value> row;
        for (const auto& i : items) row.push_back(ev.eval(i.expr, r));
        out.rows.push_back(std::move(row));
    }
    return out;
}

ResultTable Session::run_pairwise(const EstimatePairwiseDependence& stmt) const {
    const Population& pop = population(stmt.population);
    if (!pop.ensemble || pop.ensemble->size() == 0)
        throw QueryError("DEPENDENCE PROBABILITY needs models: run INITIALIZE n MODELS FOR " + pop.name);
    ResultTable out;
    out.columns = {"name0", "name1", "value"};
    out.probability = {false, false, true};
    if (pop.ensemble->analyze_iterations == 0)
        out.warnings.push_back("models for " + pop.name + " have not been analyzed; results reflect the prior");
    const auto matrix = pairwise_dependence(*pop.ensemble);
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        for (std::size_t j = 0; j < matrix.size(); ++j) {
            out.rows.push_back({pop.data.column(i).name, pop.data.column(j).name, matrix[i][j]});
        }
    }
    return out;
}

std::string Session::resolve_path(const std::string& path) const {
    const fs::path p(path);
    if (p.is_absolute() || options_.search_paths.empty()) return path;
    for (const auto& dir : options_.search_paths) {
        const fs::path candidate = fs::path(dir) / p;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

ResultTable Session::run_create_table(const CreateTable& stmt) {
    const std::string path = resolve_path(stmt.path);
    add_table_locked(stmt.name, read_csv_file(path), stmt.key.value_or(""), path);
    const DataTable& t = tables_.at(stmt.name).data;
    ResultTable out;
    out.message = "created table " + stmt.name + " (" + std::to_string(t.num_rows()) + " rows, " +
                  std::to_string(t.num_cols()) + " columns)";
    return out;
}

void Session::add_table(const std::string& name, RawTable raw, const std::string& key, const std::string& path) {
    auto lock = write_lock();
    add_table_locked(name, std::move(raw), key, path);
}

void Session::add_table_locked(const std::string& name, RawTable raw, const std::string& key, const std::string& path) {
    if (tables_.count(name)) throw QueryError("table " + name + " already exists");
    TableEntry entry;
    entry.name = name;
    entry.path = path;
    entry.key = key;
    CsvOptions opts;
    opts.key_column = key;
    opts.guess = options_.guess;
    try {
        entry.data = build_table(raw, opts);
    } catch (const SchemaError& e) {
        throw QueryError(e.what());
    }
    entry.raw = std::move(raw);
    tables_.emplace(name, std::move(entry));
}

ResultTable Session::run_create_population(const CreatePopulation& stmt) {
    if (stmt.baseline && lower(*stmt.baseline) != "crosscat")
        throw QueryError("unsupported baseline '" + *stmt.baseline + "'; only crosscat is available");
    auto t = find_name(tables_, stmt.table);
    if (t == tables_.end()) throw QueryError("unknown table \"" + stmt.table + "\"");
    const TableEntry& entry = t->second;

    std::map<std::string, StatType> overrides;
    std::vector<std::string> selected;
    bool guess_all = stmt.schema.empty();
    auto canonical = [&](const std::string& name) {
        for (const auto& h : entry.raw.header)
            if (h == name) return h;
        for (const auto& h : entry.raw.header)
            if (lower(h) == lower(name)) return h;
        throw QueryError("unknown column \"" + name + "\" in table " + entry.name);
    };
    for (const auto& d : stmt.schema) {
        if (d.kind == SchemaDirective::Kind::guess) {
            if (d.columns.empty()) guess_all = true;
            for (const auto& c : d.columns) selected.push_back(canonical(c));
        } else {
            StatType type;
            try {
                type = parse_stat_type(d.type == "boolean" ? "binary" : d.type);
            } catch (const SchemaError& e) {
                throw QueryError(e.what());
            }
            for (const auto& c : d.columns) {
                overrides[canonical(c)] = type;
                selected.push_back(canonical(c));
            }
        }
    }
    if (guess_all) selected.clear();
    create_population_locked(stmt.name, entry.name, overrides, selected);
    const Population& pop = populations_.at(stmt.name);
    ResultTable out;
    out.message = "created population " + pop.name + " with " + std::to_string(pop.data.num_cols()) + " variables";
    return out;
}

void Session::create_population(const std::string& name, const std::string& table,
                                const std::map<std::string, StatType>& overrides) {
    auto lock = write_lock();
    create_population_locked(name, table, overrides, {});
}

void Session::create_population_locked(const std::string& name, const std::string& table,
                                       const std::map<std::string, StatType>& overrides,
                                       const std::vector<std::string>& columns) {
    if (populations_.count(name) || metamodels_.count(name)) throw QueryError("population " + name + " already exists");
    const TableEntry& entry = tables_.at(table);
    RawTable raw = entry.raw;
    if (!columns.empty()) {
        // Keep the key and the listed columns, in table order.
        std::vector<std::size_t> keep;
        for (std::size_t c = 0; c < raw.header.size(); ++c) {
            const auto& h = raw.header[c];
            if (h == entry.key || std::find(columns.begin(), columns.end(), h) != columns.end()) keep.push_back(c);
        }
        RawTable sub;
        for (std::size_t c : keep) sub.header.push_back(raw.header[c]);
        for (const auto& row : raw.rows) {
            std::vector<std::optional<std::string>> r;
            for (std::size_t c : keep) r.push_back(row[c]);
            sub.rows.push_back(std::move(r));
        }
        raw = std::move(sub);
    }
    CsvOptions opts;
    opts.key_column = entry.key;
    opts.guess = options_.guess;
    opts.overrides = overrides;
    Population pop;
    pop.name = name;
    pop.table = table;
    try {
        pop.data = build_table(raw, opts);
    } catch (const SchemaError& e) {
        throw QueryError(e.what());
    }
    populations_.emplace(name, std::move(pop));
}

ResultTable Session::run_create_metamodel(const CreateMetamodel& stmt) {
    if (lower(stmt.baseline) != "crosscat")
        throw QueryError("unsupported baseline '" + stmt.baseline + "'; only crosscat is available");
    if (metamodels_.count(stmt.name) || populations_.count(stmt.name))
        throw QueryError("name " + stmt.name + " is already in use");
    const Population& pop = population(stmt.population);
    metamodels_[stmt.name] = pop.name;
    ResultTable out;
    out.message = "created metamodel " + stmt.name + " for population " + pop.name;
    return out;
}

ResultTable Session::run_initialize(const InitializeModels& stmt) {
    if (stmt.count == 0) throw QueryError("INITIALIZE needs at least one model");
    Population& pop = population_mut(stmt.target);
    const bool replaced = pop.ensemble.has_value();
    pop.ensemble = initialize_ensemble(pop.data, stmt.count, options_.seed);
    pop.cache->clear();
    pop.analyze_history.clear();
    ResultTable out;
    out.message = "initialized " + std::to_string(stmt.count) + " models for " + pop.name;
    if (replaced) out.warnings.push_back("existing models for " + pop.name + " were replaced");
    return out;
}

void Session::initialize_models(const std::string& population, std::size_t count) {
    InitializeModels stmt;
    stmt.count = count;
    stmt.target = population;
    auto lock = write_lock();
    run_initialize(stmt);
}

std::uint64_t Session::analyze_locked(Population& pop, const AnalyzeOptions& options) {
    if (!pop.ensemble) throw QueryError("run INITIALIZE n MODELS FOR " + pop.name + " before ANALYZE");
    const std::uint64_t done = relquery::analyze(*pop.ensemble, pop.data, options);
    pop.cache->clear();
    pop.analyze_history.push_back(done);
    return done;
}

ResultTable Session::run_analyze(const Analyze& stmt) {
    Population& pop = population_mut(stmt.target);
    AnalyzeOptions opts;
    opts.workers = options_.workers;
    if (stmt.unit == AnalyzeUnit::iterations) {
        opts.iterations = static_cast<std::uint64_t>(stmt.amount);
    } else {
        opts.seconds = stmt.amount * (stmt.unit == AnalyzeUnit::minutes ? 60.0 : 1.0);
    }
    const std::uint64_t done = analyze_locked(pop, opts);
    ResultTable out;
    out.message = "analyzed " + pop.name + " for " + std::to_string(done) + " iterations";
    return out;
}

std::uint64_t Session::analyze(const std::string& population, const AnalyzeOptions& options) {
    auto lock = write_lock();
    return analyze_locked(population_mut(population), options);
}

std::vector<std::string> Session::table_names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tables_) out.push_back(name);
    return out;
}

std::vector<std::string> Session::population_names() const {
    std::vector<std::string> out;
    for (const auto& [name, p] : populations_) out.push_back(name);
    return out;
}

const Population& Session::population(std::string_view name) const {
    auto p = find_name(populations_, name);
    if (p != populations_.end()) return p->second;
    if (auto m = find_name(metamodels_, name); m != metamodels_.end()) return populations_.at(m->second);
    throw QueryError("unknown population \"" + std::string(name) + "\"");
}

Population& Session::population_mut(std::string_view name) {
    return const_cast<Population&>(static_cast<const Session*>(this)->population(name));
}

const TableEntry& Session::table(std::string_view name) const {
    auto t = find_name(tables_, name);
    if (t == tables_.end()) throw QueryError("unknown table \"" + std::string(name) + "\"");
    return t->second;
}

// --- persistence ----------------------------------------------------------------------

void Session::save(const std::string& dir) const {
    auto lock = read_lock();
    fs::create_directories(dir);
    std::string index;
    for (const auto& [name, pop] : populations_) {
        SessionManifest m;
        m.table_name = pop.table;
        m.table_path = name + ".csv";
        m.table_fingerprint = pop.data.fingerprint();
        m.key_column = pop.data.key_name();
        m.schema = pop.data.columns();
        m.population = name;
        m.analyze_history = pop.analyze_history;
        m.seed = options_.seed;
        {
            std::ostringstream csv;
            write_csv(pop.data, csv);
            write_text_file((fs::path(dir) / m.table_path).string(), csv.str());
        }
        if (pop.ensemble) {
            m.ensemble_path = name + ".ensemble.json";
            save_ensemble(*pop.ensemble, (fs::path(dir) / m.ensemble_path).string());
        }
        write_text_file((fs::path(dir) / (name + ".session.json")).string(), manifest_to_json(m));
        index += name + ".session.json\n";
    }
    for (const auto& [alias, target] : metamodels_) index += "metamodel " + alias + " " + target + "\n";
    write_text_file((fs::path(dir) / "index.txt").string(), index);
}

void Session::open(const std::string& dir) {
    std::map<std::string, TableEntry> tables;
    std::map<std::string, Population> populations;
    std::map<std::string, std::string> metamodels;
    std::uint64_t seed = options_.seed;
    std::istringstream index(read_text_file((fs::path(dir) / "index.txt").string()));
    std::string line;
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        if (line.starts_with("metamodel ")) {
            std::istringstream ls(line.substr(10));
            std::string alias, target;
            ls >> alias >> target;
            metamodels[alias] = target;
            continue;
        }
        const SessionManifest m = manifest_from_json(read_text_file((fs::path(dir) / line).string()));
        const std::string csv_path = (fs::path(dir) / m.table_path).string();
        CsvOptions opts;
        opts.key_column = m.key_column;
        opts.guess = options_.guess;
        for (const auto& col : m.schema) opts.overrides[col.name] = col.type;
        RawTable raw = read_csv_file(csv_path);
        Population pop;
        pop.name = m.population;
        pop.table = m.table_name;
        pop.data = build_table(raw, opts);
        if (pop.data.fingerprint() != m.table_fingerprint)
            throw StoreError("table for population " + m.population + " does not match its manifest");
        if (!m.ensemble_path.empty())
            pop.ensemble = load_ensemble((fs::path(dir) / m.ensemble_path).string(), pop.data);
        pop.analyze_history = m.analyze_history;
        seed = m.seed;
        if (!tables.count(m.table_name)) {
            TableEntry entry;
            entry.name = m.table_name;
            entry.path = csv_path;
            entry.key = m.key_column;
            entry.data = pop.data;
            entry.raw = std::move(raw);
            tables.emplace(m.table_name, std::move(entry));
        }
        populations.emplace(pop.name, std::move(pop));
    }
    auto lock = write_lock();
    tables_ = std::move(tables);
    populations_ = std::move(populations);
    metamodels_ = std::move(metamodels);
    options_.seed = seed;
}

// --- formatting -------------------------------------------------------------------------

OutputFormat parse_output_format(std::string_view name) {
    const std::string n = lower(name);
    if (n == "table") return OutputFormat::table;
    if (n == "csv") return OutputFormat::csv;
    if (n == "json") return OutputFormat::json;
    throw QueryError("unknown output format '" + std::string(name) + "' (expected table, csv or json)");
}

std::string format_probability(double p) {
    // Truncate: 2/3 prints as 0.66. The epsilon keeps 0.29 from becoming 0.28.
    const double hundredths = std::floor(p * 100.0 + 1e-9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", hundredths / 100.0);
    return buf;
}

std::string format_value(const Value& value, bool probability) {
    if (is_null(value)) return "";
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    const double d = std::get<double>(value);
    if (probability) return format_probability(d);
    return format_number(d);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    return out + "\"";
}

std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (unsigned char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (ch < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(ch));
                }
        }
    }
    return out + "\"";
}

std::string json_value(const Value& v) {
    if (is_null(v)) return "null";
    if (const auto* s = std::get_if<std::string>(&v)) return json_string(*s);
    const double d = std::get<double>(v);
    if (!std::isfinite(d)) return "null";
    return format_number(d);
}

}  // namespace

std::string format_result(const ResultTable& result, OutputFormat format) {
    std::string out;
    if (!result.has_table()) {
        if (result.message.empty()) return out;
        if (format == OutputFormat::json) return "{\"message\":" + json_string(result.message) + "}\n";
        return result.message + "\n";
    }
    const std::size_t ncol = result.columns.size();
    auto prob = [&](std::size_t c) { return c < result.probability.size() && result.probability[c]; };
    switch (format) {
        case OutputFormat::csv: {
            for (std::size_t c = 0; c < ncol; ++c) out += (c ? "," : "") + csv_field(result.columns[c]);
            out += "\n";
            for (const auto& row : result.rows) {
                for (std::size_t c = 0; c < ncol; ++c) out += (c ? "," : "") + csv_field(format_value(row[c], prob(c)));
                out += "\n";
            }
            return out;
        }
        case OutputFormat::json: {
            out = "[";
            for (std::size_t r = 0; r < result.rows.size(); ++r) {
                out += r ? ",\n{" : "\n{";
                for (std::size_t c = 0; c < ncol; ++c)
                    out += (c ? "," : "") + json_string(result.columns[c]) + ":" + json_value(result.rows[r][c]);
                out += "}";
            }
            return out + (result.rows.empty() ? "]\n" : "\n]\n");
        }
        case OutputFormat::table: break;
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width(ncol);
    std::vector<bool> numeric(ncol, true);
    for (std::size_t c = 0; c < ncol; ++c) width[c] = result.columns[c].size();
    for (const auto& row : result.rows) {
        std::vector<std::string> line;
        for (std::size_t c = 0; c < ncol; ++c) {
            line.push_back(format_value(row[c], prob(c)));
            width[c] = std::max(width[c], line.back().size());
            if (std::holds_alternative<std::string>(row[c])) numeric[c] = false;
        }
        cells.push_back(std::move(line));
    }
    auto emit = [&](const std::vector<std::string>& line, bool header) {
        std::string text;
        for (std::size_t c = 0; c < ncol; ++c) {
            const std::string pad(width[c] - line[c].size(), ' ');
            const bool right = numeric[c] && !header && !result.rows.empty();
            std::string cell = right ? pad + line[c] : line[c] + (c + 1 < ncol ? pad : "");
            text += (c ? "  " : "") + cell;
        }
        while (!text.empty() && text.back() == ' ') text.pop_back();
        out += text + "\n";
    };
    emit(result.columns, true);
    if (cells.empty()) return out;
    std::string rule;
    for (std::size_t c = 0; c < ncol; ++c) rule += (c ? "  " : "") + std::string(width[c], '-');
    out += rule + "\n";
    for (const auto& line : cells) emit(line, false);
    return out;
}

}  // namespace relquery::bql
