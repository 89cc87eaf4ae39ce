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
#include "relquery/table.hpp"

#include <charconv>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "relquery/errors.hpp"
#include "relquery/rng.hpp"

namespace relquery {

StatType StatType::categorical(std::size_t arity) {
    if (arity < 2) throw SchemaError("categorical arity must be at least 2");
    return {StatKind::categorical, arity};
}

std::string to_string(const StatType& type) {
    switch (type.kind) {
        case StatKind::binary: return "binary";
        case StatKind::categorical: return "categorical(" + std::to_string(type.arity) + ")";
        case StatKind::numerical: return "numerical";
        case StatKind::count: return "count";
    }
    return "unknown";
}

StatType parse_stat_type(std::string_view text) {
    std::string lower;
    for (char ch : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (lower == "binary") return StatType::binary();
    if (lower == "numerical" || lower == "numeric" || lower == "real") return StatType::numerical();
    if (lower == "count" || lower == "counts") return StatType::count();
    if (lower == "categorical" || lower == "nominal") return {StatKind::categorical, 0};
    if (lower.starts_with("categorical(") && lower.ends_with(")")) {
        std::size_t arity = 0;
        const char* first = lower.data() + 12;
        const char* last = lower.data() + lower.size() - 1;
        auto [ptr, ec] = std::from_chars(first, last, arity);
        if (ec == std::errc{} && ptr == last) return StatType::categorical(arity);
    }
    throw SchemaError("unknown statistical type '" + std::string(text) + "'");
}

Codebook::Codebook(std::vector<std::string> symbols) {
    for (auto& symbol : symbols) add(symbol);
}

std::optional<std::uint32_t> Codebook::code_of(std::string_view symbol) const {
    auto it = index_.find(std::string(symbol));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Codebook::symbol(std::uint32_t code) const {
    if (code >= symbols_.size()) throw std::out_of_range("codebook code out of range");
    return symbols_[code];
}

std::uint32_t Codebook::add(const std::string& symbol) {
    if (auto code = code_of(symbol)) return *code;
    const auto code = static_cast<std::uint32_t>(symbols_.size());
    symbols_.push_back(symbol);
    index_.emplace(symbol, code);
    return code;
}

const ColumnSchema& DataTable::column(std::size_t col) const {
    if (col >= columns_.size()) throw std::out_of_range("column index out of range");
    return columns_[col];
}

Cell DataTable::get_cell(RowId row, std::size_t col) const {
    if (row >= num_rows_) throw std::out_of_range("row index out of range");
    if (col >= columns_.size()) throw std::out_of_range("column index out of range");
    if (!present_[col][row]) return std::nullopt;
    return values_[col][row];
}

std::vector<RowId> DataTable::column_observed_rows(std::size_t col) const {
    if (col >= columns_.size()) throw std::out_of_range("column index out of range");
    std::vector<RowId> rows;
    for (RowId r = 0; r < num_rows_; ++r) {
        if (present_[col][r]) rows.push_back(r);
    }
    return rows;
}

std::size_t DataTable::missing_count(std::size_t col) const {
    if (col >= columns_.size()) throw std::out_of_range("column index out of range");
    std::size_t missing = 0;
    for (auto flag : present_[col]) missing += flag ? 0 : 1;
    return missing;
}

std::size_t DataTable::present_cell_count() const {
    std::size_t total = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) total += num_rows_ - missing_count(c);
    return total;
}

std::optional<std::size_t> DataTable::find_column(std::string_view name) const {
    auto it = column_index_.find(std::string(name));
    if (it == column_index_.end()) return std::nullopt;
    return it->second;
}

std::size_t DataTable::column_index(std::string_view name) const {
    if (auto col = find_column(name)) return *col;
    throw SchemaError("unknown column \"" + std::string(name) + "\"");
}

std::string DataTable::row_key(RowId row) const {
    if (row >= num_rows_) throw std::out_of_range("row index out of range");
    return has_key() ? keys_[row] : std::to_string(row);
}

std::optional<RowId> DataTable::find_row(std::string_view key) const {
    if (!has_key()) {
        RowId row = 0;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), row);
        if (ec != std::errc{} || ptr != key.data() + key.size() || row >= num_rows_) return std::nullopt;
        return row;
    }
    auto it = key_index_.find(std::string(key));
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string format_real(double x) {
    char buf[64];
    // Shortest representation that round-trips.
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

}  // namespace

std::string DataTable::format_cell(RowId row, std::size_t col) const {
    const Cell cell = get_cell(row, col);
    if (!cell) return {};
    const ColumnSchema& schema = columns_[col];
    switch (schema.type.kind) {
        case StatKind::binary:
        case StatKind::categorical: {
            const auto code = static_cast<std::uint32_t>(*cell);
            if (code < schema.codebook.size()) return schema.codebook.symbol(code);
            return std::to_string(code);
        }
        case StatKind::count: return std::to_string(static_cast<std::uint64_t>(*cell));
        case StatKind::numerical: return format_real(*cell);
    }
    return {};
}

std::uint64_t DataTable::fingerprint() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto feed = [&h](std::uint64_t x) { h = mix64(h ^ x); };
    auto feed_string = [&](const std::string& s) {
        feed(s.size());
        for (unsigned char ch : s) feed(ch);
    };
    feed(num_rows_);
    feed(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        feed_string(columns_[c].name);
        feed(static_cast<std::uint64_t>(columns_[c].type.kind));
        feed(columns_[c].type.arity);
        for (const auto& symbol : columns_[c].codebook.symbols()) feed_string(symbol);
        for (RowId r = 0; r < num_rows_; ++r) {
            if (!present_[c][r]) {
                feed(0x5A5A5A5A);
                continue;
            }
            std::uint64_t bits = 0;
            static_assert(sizeof(bits) == sizeof(double));
            std::memcpy(&bits, &values_[c][r], sizeof(bits));
            feed(bits);
        }
    }
    feed_string(key_name_);
    for (const auto& key : keys_) feed_string(key);
    return h;
}

DataTable DataTable::with_schema(std::vector<ColumnSchema> columns) const {
    if (columns.size() != columns_.size()) throw SchemaError("schema column count mismatch");
    DataTable copy = *this;
    copy.columns_ = std::move(columns);
    copy.column_index_.clear();
    for (std::size_t c = 0; c < copy.columns_.size(); ++c) {
        copy.column_index_.emplace(copy.columns_[c].name, c);
        for (RowId r = 0; r < num_rows_; ++r) {
            if (copy.present_[c][r]) check_cell_value(copy.columns_[c], copy.values_[c][r]);
        }
    }
    return copy;
}

void check_cell_value(const ColumnSchema& column, double value) {
    auto fail = [&](const std::string& why) {
        throw SchemaError("column \"" + column.name + "\": " + why);
    };
    if (!std::isfinite(value)) fail("non-finite value");
    switch (column.type.kind) {
        case StatKind::numerical: break;
        case StatKind::count:
            if (value < 0 || value != std::floor(value)) fail("count must be a non-negative integer");
            break;
        case StatKind::binary:
        case StatKind::categorical:
            if (value < 0 || value != std::floor(value) ||
                value >= static_cast<double>(column.type.arity))
                fail("code out of range for " + to_string(column.type));
            break;
    }
}

TableBuilder::TableBuilder(std::vector<ColumnSchema> columns) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        auto& schema = columns[c];
        if (schema.type.kind == StatKind::categorical && schema.type.arity < 2)
            throw SchemaError("column \"" + schema.name + "\": categorical arity must be >= 2");
        if (schema.type.is_discrete() && schema.codebook.size() > schema.type.arity)
            throw SchemaError("column \"" + schema.name + "\": codebook larger than arity");
        if (!table_.column_index_.emplace(schema.name, c).second)
            throw SchemaError("duplicate column name \"" + schema.name + "\"");
    }
    table_.values_.resize(columns.size());
    table_.present_.resize(columns.size());
    table_.columns_ = std::move(columns);
}

TableBuilder& TableBuilder::with_key(std::string key_name) {
    if (table_.num_rows_ != 0) throw SchemaError("key must be designated before rows are added");
    table_.key_name_ = std::move(key_name);
    return *this;
}

TableBuilder& TableBuilder::add_row(const std::vector<Cell>& cells, std::string key) {
    if (cells.size() != table_.columns_.size())
        throw SchemaError("row " + std::to_string(table_.num_rows_) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(table_.columns_.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c]) check_cell_value(table_.columns_[c], *cells[c]);
    }
    if (table_.has_key()) {
        if (!table_.key_index_.emplace(key, table_.num_rows_).second)
            throw SchemaError("duplicate row key '" + key + "'");
        table_.keys_.push_back(std::move(key));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        table_.values_[c].push_back(cells[c].value_or(0.0));
        table_.present_[c].push_back(cells[c] ? 1 : 0);
    }
    ++table_.num_rows_;
    return *this;
}

DataTable TableBuilder::build() && { return std::move(table_); }

}  // namespace relquery
