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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relquery/ensemble.hpp"
#include "relquery/table.hpp"

namespace relquery {

/// CSV contents before typing. Missing fields (empty or `NaN`) are nullopt.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<std::string>>> rows;

    std::vector<std::optional<std::string>> column(std::size_t col) const;
};

/// RFC-4180 reader: quoted fields may contain delimiters, doubled quotes and
/// newlines. Throws StoreError on ragged rows, duplicate or empty headers.
RawTable read_csv(std::istream& in, char delimiter = ',');
RawTable read_csv_file(const std::string& path, char delimiter = ',');

struct TypeGuessOptions {
    std::size_t count_max_distinct = 50;
    /// Accept "35,550" as 35550.
    bool thousands_separators = false;
};

/// Heuristic statistical type of one raw column. Throws SchemaError when the
/// column has no present values.
StatType guess_stat_type(const std::vector<std::optional<std::string>>& values,
                         const TypeGuessOptions& options = {});

/// Parses a numeric field, optionally stripping thousands separators.
std::optional<double> parse_number(std::string_view text, bool thousands_separators = false);

struct CsvOptions {
    char delimiter = ',';
    /// Column holding unique row keys; excluded from the modeled columns.
    std::string key_column;
    TypeGuessOptions guess;
    /// Explicit types that replace guesses, by column name.
    std::map<std::string, StatType> overrides;
};

/// Types every non-key column (guess or override) and encodes the cells.
/// Categorical codebooks list symbols in sorted order (numerically when every
/// symbol is a number).
DataTable build_table(const RawTable& raw, const CsvOptions& options = {});
DataTable load_csv(const std::string& path, const CsvOptions& options = {});

/// Writes the table back as CSV: key column first when present, missing
/// cells as empty fields, reals in shortest round-trip form.
void write_csv(const DataTable& table, std::ostream& out);

/// Text form of an ensemble: partitions as slot arrays, concentrations,
/// hyperparameters, seeds and stream positions. Sufficient statistics are
/// not stored.
std::string ensemble_to_json(const Ensemble& ensemble);
/// Restores an ensemble and rebuilds its statistics from `table`. Throws
/// StoreError on a version, fingerprint or structure problem.
Ensemble ensemble_from_json(const std::string& text, const DataTable& table);

void save_ensemble(const Ensemble& ensemble, const std::string& path);
Ensemble load_ensemble(const std::string& path, const DataTable& table);

inline constexpr int kEnsembleFormatVersion = 1;

/// Everything needed to reopen a session.
struct SessionManifest {
    int version = 1;
    std::string table_name;
    std::string table_path;
    std::uint64_t table_fingerprint = 0;
    std::string key_column;
    std::vector<ColumnSchema> schema;
    std::string population;
    std::string ensemble_path;
    std::vector<std::uint64_t> analyze_history;
    std::uint64_t seed = 0;
};

std::string manifest_to_json(const SessionManifest& manifest);
SessionManifest manifest_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace relquery
