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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relquery/bql/ast.hpp"
#include "relquery/ensemble.hpp"
#include "relquery/relevance.hpp"
#include "relquery/store.hpp"
#include "relquery/table.hpp"

namespace relquery::bql {

/// Result cell: NULL, number or text.
using Value = std::variant<std::monostate, double, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    /// Per column: holds probabilities (rendered truncated to 2 decimals).
    std::vector<bool> probability;
    std::vector<std::vector<Value>> rows;
    std::vector<std::string> warnings;
    /// Status line for statements that return no table.
    std::string message;

    bool has_table() const { return !columns.empty(); }
};

enum class OutputFormat { table, csv, json };

OutputFormat parse_output_format(std::string_view name);

/// Renders a result. Table mode aligns columns and prints only the header
/// for an empty result; JSON mode emits an array with one object per row.
std::string format_result(const ResultTable& result, OutputFormat format);

/// Probability text truncated (not rounded) to two decimals: 2/3 -> "0.66".
std::string format_probability(double p);
std::string format_value(const Value& value, bool probability);

struct SessionOptions {
    std::uint64_t seed = 0;
    /// Directories tried, in order, for relative CREATE TABLE paths.
    std::vector<std::string> search_paths;
    TypeGuessOptions guess;
    std::size_t workers = 1;
};

struct TableEntry {
    std::string name;
    std::string path;
    std::string key;
    RawTable raw;
    /// Cells typed by guessing, for plain SELECTs over the table.
    DataTable data;
};

struct Population {
    std::string name;
    std::string table;
    DataTable data;
    std::optional<Ensemble> ensemble;
    std::shared_ptr<CoOccurrenceCache> cache = std::make_shared<CoOccurrenceCache>();
    /// Iterations completed by each ANALYZE, in order.
    std::vector<std::uint64_t> analyze_history;
};

/// Tables, populations and their ensembles, driven by BQL statements.
///
/// `execute` is safe to call from several threads: SELECT/ESTIMATE run under
/// a shared lock and never mutate an ensemble; other statements are
/// exclusive. Accessors returning references must be used under `read_lock`.
class Session {
public:
    explicit Session(SessionOptions options = {});

    /// Parses and executes exactly one statement.
    ResultTable execute(std::string_view text);
    ResultTable execute(const Statement& statement);

    std::uint64_t seed() const;
    void set_seed(std::uint64_t seed);

    /// Registers a table from parsed CSV contents.
    void add_table(const std::string& name, RawTable raw, const std::string& key, const std::string& path = {});
    /// Builds a population over `table` with every column's type guessed,
    /// except those in `overrides`.
    void create_population(const std::string& name, const std::string& table,
                           const std::map<std::string, StatType>& overrides = {});
    void initialize_models(const std::string& population, std::size_t count);
    /// Runs inference under the exclusive lock and records the iterations.
    std::uint64_t analyze(const std::string& population, const AnalyzeOptions& options);

    std::vector<std::string> table_names() const;
    std::vector<std::string> population_names() const;
    /// Resolves a population or metamodel name; throws QueryError.
    const Population& population(std::string_view name) const;
    const TableEntry& table(std::string_view name) const;

    /// Writes every population (typed CSV, ensemble and manifest) to `dir`.
    void save(const std::string& dir) const;
    /// Replaces the session contents with a directory written by `save`.
    void open(const std::string& dir);

    std::shared_lock<std::shared_mutex> read_lock() const { return std::shared_lock(mutex_); }
    std::unique_lock<std::shared_mutex> write_lock() const { return std::unique_lock(mutex_); }
    std::unique_lock<std::shared_mutex> try_write_lock() const {
        return std::unique_lock(mutex_, std::try_to_lock);
    }

private:
    ResultTable run_select(const SelectStmt& select) const;
    ResultTable run_pairwise(const EstimatePairwiseDependence& stmt) const;
    ResultTable run_create_table(const CreateTable& stmt);
    ResultTable run_create_population(const CreatePopulation& stmt);
    ResultTable run_create_metamodel(const CreateMetamodel& stmt);
    ResultTable run_initialize(const InitializeModels& stmt);
    ResultTable run_analyze(const Analyze& stmt);

    Population& population_mut(std::string_view name);
    std::string resolve_path(const std::string& path) const;
    void add_table_locked(const std::string& name, RawTable raw, const std::string& key, const std::string& path);
    void create_population_locked(const std::string& name, const std::string& table,
                                  const std::map<std::string, StatType>& overrides,
                                  const std::vector<std::string>& columns);
    std::uint64_t analyze_locked(Population& pop, const AnalyzeOptions& options);

    friend class Evaluator;

    SessionOptions options_;
    std::map<std::string, TableEntry> tables_;
    std::map<std::string, Population> populations_;
    /// Metamodel name -> population name.
    std::map<std::string, std::string> metamodels_;
    mutable std::shared_mutex mutex_;
};

}  // namespace relquery::bql
