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
#include <optional>
#include <string>
#include <string_view>

#include "relquery/baselines.hpp"
#include "relquery/bql/session.hpp"

namespace relquery::app {

enum ExitCode : int { kOk = 0, kQueryError = 1, kSystemError = 2 };

/// Exit code for an exception escaping a statement.
int exit_code_for(const std::exception& e);

/// One-paragraph error text; parse errors get the source line and a caret.
std::string render_error(const std::exception& e, std::string_view source);

/// Prints a result: the table to `out`, warnings to `err`. Status messages go
/// to `out` in table mode and to `err` otherwise, so csv/json stay parseable.
void print_result(const bql::ResultTable& result, bql::OutputFormat format, std::ostream& out, std::ostream& err);

struct ScriptOptions {
    bql::OutputFormat format = bql::OutputFormat::table;
    bool keep_going = false;
};

/// Executes `;`-separated statements in order. Returns 0, or the exit code
/// of the first failure (execution stops there unless keep_going).
int run_script(bql::Session& session, std::string_view script, const ScriptOptions& options, std::ostream& out,
               std::ostream& err);

struct ReplOptions {
    bql::OutputFormat format = bql::OutputFormat::table;
    bool prompt = true;
};

/// Reads statements terminated by `;` or a blank line. Lines starting with a
/// backslash are meta commands: \seed N, \save DIR, \open DIR,
/// \format table|csv|json, \help, \quit. Errors never end the loop.
void repl(bql::Session& session, std::istream& in, std::ostream& out, std::ostream& err,
          const ReplOptions& options = {});

/// Loads `csv_path` as table `<stem>_raw` and population `<stem>`, then
/// initializes and analyzes models when `models` > 0. Returns the population name.
std::string load_dataset(bql::Session& session, const std::string& csv_path, const std::string& key,
                         std::size_t models, std::uint64_t iterations, std::optional<std::string> name = {});

/// Heatmap over rows (relevance, cosine, euclidean, braycurtis) or over
/// columns ("dependence"). Similarity measures use the `k` columns most
/// dependent on `context`. When `imputed` is given (an externally imputed
/// copy of the table with the same rows), vectors are read from it instead
/// of median imputation.
Heatmap build_heatmap(const bql::Population& population, std::string_view measure, const std::string& context,
                      std::size_t k, const DataTable* imputed = nullptr);

}  // namespace relquery::app
