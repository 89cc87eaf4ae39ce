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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace relquery::bql {

/// Owning pointer with value semantics: copies deeply, compares by value.
template <class T>
class Box {
public:
    Box() = default;
    Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
    Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& other) {
        if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;

    explicit operator bool() const { return ptr_ != nullptr; }
    T& operator*() { return *ptr_; }
    const T& operator*() const { return *ptr_; }
    T* operator->() { return ptr_.get(); }
    const T* operator->() const { return ptr_.get(); }
    const T* get() const { return ptr_.get(); }

    friend bool operator==(const Box& a, const Box& b) {
        if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
        return *a.ptr_ == *b.ptr_;
    }

private:
    std::unique_ptr<T> ptr_;
};

struct Expr;
struct SelectStmt;

struct Null {
    bool operator==(const Null&) const = default;
};

/// NULL, number or string.
using LiteralValue = std::variant<Null, double, std::string>;

struct Literal {
    LiteralValue value;
    bool operator==(const Literal&) const = default;
};

struct ColumnRef {
    std::string name;
    bool operator==(const ColumnRef&) const = default;
};

enum class UnaryOp { negate, logical_not };

struct Unary {
    UnaryOp op = UnaryOp::negate;
    Box<Expr> operand;
    bool operator==(const Unary&) const = default;
};

enum class BinaryOp { logical_or, logical_and, eq, ne, lt, le, gt, ge, is, is_not, add, sub, mul, div };

struct Binary {
    BinaryOp op = BinaryOp::eq;
    Box<Expr> lhs;
    Box<Expr> rhs;
    bool operator==(const Binary&) const = default;
};

struct Like {
    Box<Expr> operand;
    Box<Expr> pattern;
    bool negated = false;
    bool operator==(const Like&) const = default;
};

struct InList {
    Box<Expr> operand;
    std::vector<Expr> items;
    Box<SelectStmt> subquery;
    bool negated = false;
    bool operator==(const InList&) const;
};

enum class AggregateKind { avg, sum, min, max, count };

struct Aggregate {
    AggregateKind kind = AggregateKind::avg;
    /// Empty for COUNT(*).
    Box<Expr> arg;
    bool operator==(const Aggregate&) const = default;
};

/// One column = value pair of a hypothetical row.
struct Assignment {
    std::string column;
    LiteralValue value;
    bool operator==(const Assignment&) const = default;
};

/// Existing query rows: literal keys or a key-producing SELECT.
struct RowSet {
    std::vector<LiteralValue> keys;
    Box<SelectStmt> subquery;
    bool operator==(const RowSet&) const;
};

struct RelevanceExpr {
    std::optional<RowSet> existing;
    std::vector<std::vector<Assignment>> hypothetical;
    std::string context;
    bool operator==(const RelevanceExpr&) const;
};

struct DependenceExpr {
    std::string column1;
    std::string column2;
    bool operator==(const DependenceExpr&) const = default;
};

struct Expr {
    std::variant<Literal, ColumnRef, Unary, Binary, Like, InList, Aggregate, RelevanceExpr, DependenceExpr> node;
    bool operator==(const Expr& other) const { return node == other.node; }
};

struct SelectItem {
    /// `*` when absent.
    std::optional<Expr> expr;
    std::optional<std::string> alias;
    bool operator==(const SelectItem&) const = default;
};

struct OrderItem {
    Expr expr;
    bool descending = false;
    /// ASC/DESC written explicitly (kept so printing round-trips).
    bool explicit_direction = false;
    bool operator==(const OrderItem&) const = default;
};

struct SelectStmt {
    bool estimate = false;
    std::vector<SelectItem> items;
    std::string source;
    std::optional<Expr> where;
    std::vector<OrderItem> order_by;
    std::optional<std::uint64_t> limit;
    bool operator==(const SelectStmt&) const = default;
};

inline bool InList::operator==(const InList& o) const {
    return operand == o.operand && items == o.items && subquery == o.subquery && negated == o.negated;
}
inline bool RowSet::operator==(const RowSet& o) const { return keys == o.keys && subquery == o.subquery; }
inline bool RelevanceExpr::operator==(const RelevanceExpr& o) const {
    return existing == o.existing && hypothetical == o.hypothetical && context == o.context;
}

struct CreateTable {
    std::string name;
    std::string path;
    std::optional<std::string> key;
    bool operator==(const CreateTable&) const = default;
};

struct SchemaDirective {
    enum class Kind { guess, set_type } kind = Kind::guess;
    /// Empty means every column (`*`).
    std::vector<std::string> columns;
    /// For set_type: "numerical", "categorical", "categorical(3)", ...
    std::string type;
    bool operator==(const SchemaDirective&) const = default;
};

struct CreatePopulation {
    std::string name;
    std::string table;
    std::vector<SchemaDirective> schema;
    std::optional<std::string> baseline;
    bool operator==(const CreatePopulation&) const = default;
};

struct CreateMetamodel {
    std::string name;
    std::string population;
    std::string baseline;
    bool operator==(const CreateMetamodel&) const = default;
};

struct InitializeModels {
    std::uint64_t count = 0;
    std::string target;
    bool operator==(const InitializeModels&) const = default;
};

enum class AnalyzeUnit { iterations, seconds, minutes };

struct Analyze {
    std::string target;
    double amount = 0;
    AnalyzeUnit unit = AnalyzeUnit::iterations;
    bool wait = false;
    bool operator==(const Analyze&) const = default;
};

struct EstimatePairwiseDependence {
    std::string population;
    bool operator==(const EstimatePairwiseDependence&) const = default;
};

using Statement = std::variant<SelectStmt, CreateTable, CreatePopulation, CreateMetamodel, InitializeModels, Analyze,
                               EstimatePairwiseDependence>;

}  // namespace relquery::bql
