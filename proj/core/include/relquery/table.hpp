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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relquery {

enum class StatKind { binary, categorical, numerical, count };

/// Statistical type of a column; selects the conjugate component family.
struct StatType {
    StatKind kind = StatKind::numerical;
    /// Number of symbols; 2 for binary, >= 2 for categorical, 0 otherwise.
    std::size_t arity = 0;

    static StatType binary() { return {StatKind::binary, 2}; }
    static StatType categorical(std::size_t arity);
    static StatType numerical() { return {StatKind::numerical, 0}; }
    static StatType count() { return {StatKind::count, 0}; }

    bool is_discrete() const { return kind == StatKind::binary || kind == StatKind::categorical; }
    bool operator==(const StatType&) const = default;
};

std::string to_string(const StatType& type);
/// Parses "binary", "categorical", "categorical(3)", "numerical", "count".
StatType parse_stat_type(std::string_view text);

/// Bijection between category strings and contiguous integer codes.
class Codebook {
public:
    Codebook() = default;
    explicit Codebook(std::vector<std::string> symbols);

    std::optional<std::uint32_t> code_of(std::string_view symbol) const;
    const std::string& symbol(std::uint32_t code) const;
    std::uint32_t add(const std::string& symbol);
    std::size_t size() const { return symbols_.size(); }
    const std::vector<std::string>& symbols() const { return symbols_; }
    bool operator==(const Codebook& other) const { return symbols_ == other.symbols_; }

private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct ColumnSchema {
    std::string name;
    StatType type;
    /// Present iff the column is binary or categorical.
    Codebook codebook;
    bool operator==(const ColumnSchema&) const = default;
};

/// Present cells hold a double: finite reals for numerical columns, exact
/// non-negative integers for counts, codes for binary/categorical columns.
using Cell = std::optional<double>;

using RowId = std::size_t;

/// N x p table with per-cell missingness, stored column-major.
///
/// Immutable once constructed through `TableBuilder`; every present cell
/// conforms to its column's statistical type.
class DataTable {
public:
    DataTable() = default;

    std::size_t num_rows() const { return num_rows_; }
    std::size_t num_cols() const { return columns_.size(); }
    const std::vector<ColumnSchema>& columns() const { return columns_; }
    const ColumnSchema& column(std::size_t col) const;

    /// Throws std::out_of_range for an unknown row or column.
    Cell get_cell(RowId row, std::size_t col) const;
    bool is_present(RowId row, std::size_t col) const { return present_[col][row] != 0; }
    /// Unchecked access to a present cell.
    double value(RowId row, std::size_t col) const { return values_[col][row]; }

    std::vector<RowId> column_observed_rows(std::size_t col) const;
    std::size_t missing_count(std::size_t col) const;
    std::size_t present_cell_count() const;

    std::optional<std::size_t> find_column(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;

    /// Designated key column name, empty when rows are keyed by rowid.
    const std::string& key_name() const { return key_name_; }
    bool has_key() const { return !key_name_.empty(); }
    /// Key string of a row (its rowid when no key column is designated).
    std::string row_key(RowId row) const;
    std::optional<RowId> find_row(std::string_view key) const;

    /// Human-readable value of a present cell, decoding categorical codes.
    std::string format_cell(RowId row, std::size_t col) const;

    /// Content hash over schema, key column and every cell.
    std::uint64_t fingerprint() const;

    /// Same cells under a different schema (used for stat-type overrides).
    DataTable with_schema(std::vector<ColumnSchema> columns) const;

private:
    friend class TableBuilder;

    std::size_t num_rows_ = 0;
    std::vector<ColumnSchema> columns_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<std::uint8_t>> present_;
    std::string key_name_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, RowId> key_index_;
    std::unordered_map<std::string, std::size_t> column_index_;
};

/// Validating constructor for DataTable.
class TableBuilder {
public:
    explicit TableBuilder(std::vector<ColumnSchema> columns);

    /// Designate a key column; keys must be supplied for every row.
    TableBuilder& with_key(std::string key_name);

    /// Appends one row; `cells.size()` must equal the column count.
    TableBuilder& add_row(const std::vector<Cell>& cells, std::string key = {});

    DataTable build() &&;

private:
    DataTable table_;
};

/// Check that `value` is admissible for the column type; throws SchemaError.
void check_cell_value(const ColumnSchema& column, double value);

}  // namespace relquery
