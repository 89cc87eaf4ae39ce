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
#include "app.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "relquery/bql/lexer.hpp"
#include "relquery/bql/parser.hpp"
#include "relquery/errors.hpp"

namespace relquery::app {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string source_line(std::string_view source, std::size_t line) {
    std::size_t start = 0;
    for (std::size_t l = 1; l < line; ++l) {
        const auto nl = source.find('\n', start);
        if (nl == std::string_view::npos) return {};
        start = nl + 1;
    }
    const auto end = source.find('\n', start);
    return std::string(source.substr(start, end == std::string_view::npos ? source.size() - start : end - start));
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const QueryError*>(&e) ||
        dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const ModelError*>(&e))
        return kQueryError;
    return kSystemError;
}

std::string render_error(const std::exception& e, std::string_view source) {
    std::string out = "error: ";
    out += e.what();
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        std::string line = source_line(source, pe->pos().line);
        for (auto& ch : line)
            if (ch == '\t') ch = ' ';
        if (!line.empty()) {
            out += "\n  " + line + "\n  " + std::string(pe->pos().column > 0 ? pe->pos().column - 1 : 0, ' ') + "^";
        }
    }
    return out;
}

void print_result(const bql::ResultTable& result, bql::OutputFormat format, std::ostream& out, std::ostream& err) {
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (!result.has_table()) {
        if (result.message.empty()) return;
        (format == bql::OutputFormat::table ? out : err) << result.message << '\n';
        return;
    }
    out << bql::format_result(result, format);
}

int run_script(bql::Session& session, std::string_view script, const ScriptOptions& options, std::ostream& out,
               std::ostream& err) {
    std::vector<bql::StatementText> statements;
    try {
        statements = bql::split_statements(script);
    } catch (const std::exception& e) {
        err << render_error(e, script) << '\n';
        return exit_code_for(e);
    }
    int status = kOk;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        const auto& st = statements[i];
        try {
            bql::Statement stmt;
            try {
                stmt = bql::parse_statement(st.text);
            } catch (const ParseError& e) {
                // Positions relative to the whole script.
                SourcePos pos = e.pos();
                if (pos.line == 1) pos.column += st.pos.column - 1;
                pos.line += st.pos.line - 1;
                pos.offset += st.pos.offset;
                throw ParseError(e.detail(), pos, e.expected());
            }
            print_result(session.execute(stmt), options.format, out, err);
        } catch (const std::exception& e) {
            err << "statement " << (i + 1) << ": " << render_error(e, script) << '\n';
            if (status == kOk) status = exit_code_for(e);
            if (!options.keep_going) return status;
        }
    }
    return status;
}

void repl(bql::Session& session, std::istream& in, std::ostream& out, std::ostream& err, const ReplOptions& options) {
    bql::OutputFormat format = options.format;
    std::string buffer;
    auto prompt = [&] {
        if (options.prompt) out << (buffer.empty() ? "bql> " : "...> ") << std::flush;
    };
    auto flush_buffer = [&] {
        const std::string text = buffer;
        buffer.clear();
        if (trim(text).empty()) return;
        ScriptOptions so;
        so.format = format;
        so.keep_going = true;
        run_script(session, text, so, out, err);
    };
    prompt();
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (buffer.empty() && t.starts_with("\\")) {
            std::istringstream args(t.substr(1));
            std::string cmd, arg;
            args >> cmd >> arg;
            try {
                if (cmd == "quit" || cmd == "q") return;
                if (cmd == "seed") {
                    session.set_seed(std::stoull(arg));
                    out << "seed set to " << session.seed() << '\n';
                } else if (cmd == "save") {
                    session.save(arg);
                    out << "saved session to " << arg << '\n';
                } else if (cmd == "open") {
                    session.open(arg);
                    out << "opened session from " << arg << '\n';
                } else if (cmd == "format") {
                    format = bql::parse_output_format(arg);
                } else if (cmd == "help") {
                    out << "statements end with ';' or a blank line\n"
                           "\\seed N  \\save DIR  \\open DIR  \\format table|csv|json  \\quit\n";
                } else {
                    err << "error: unknown command \\" << cmd << " (try \\help)\n";
                }
            } catch (const std::exception& e) {
                err << "error: " << e.what() << '\n';
            }
            prompt();
            continue;
        }
        if (t.empty()) {
            flush_buffer();
            prompt();
            continue;
        }
        buffer += line + "\n";
        if (t.back() == ';') flush_buffer();
        prompt();
    }
    flush_buffer();
}

std::string load_dataset(bql::Session& session, const std::string& csv_path, const std::string& key,
                         std::size_t models, std::uint64_t iterations, std::optional<std::string> name) {
    const std::string stem = name ? *name : std::filesystem::path(csv_path).stem().string();
    session.add_table(stem + "_raw", read_csv_file(csv_path), key, csv_path);
    session.create_population(stem, stem + "_raw");
    if (models > 0) {
        session.initialize_models(stem, models);
        if (iterations > 0) {
            AnalyzeOptions opts;
            opts.iterations = iterations;
            session.analyze(stem, opts);
        }
    }
    return stem;
}

Heatmap build_heatmap(const bql::Population& pop, std::string_view measure, const std::string& context,
                      std::size_t k, const DataTable* imputed) {
    if (!pop.ensemble) throw QueryError("population " + pop.name + " has no models");
    const DataTable& data = pop.data;
    if (measure == "dependence") {
        Heatmap h;
        h.matrix = pairwise_dependence(*pop.ensemble);
        for (const auto& col : data.columns()) h.labels.push_back(col.name);
        h.order = single_linkage_order(h.matrix);
        return h;
    }
    const auto ctx = data.find_column(context);
    if (!ctx) throw QueryError("unknown context column \"" + context + "\"");
    const Measure m = parse_measure(measure);
    if (m == Measure::relevance) return relevance_heatmap(*pop.ensemble, *pop.cache, data, *ctx);
    std::vector<std::string> labels;
    for (RowId r = 0; r < data.num_rows(); ++r) labels.push_back(data.row_key(r));
    const auto columns = select_context_columns(*pop.ensemble, *ctx, std::max<std::size_t>(k, 1));
    if (!imputed) return similarity_heatmap(impute_median(data, columns, true), m, std::move(labels));
    if (imputed->num_rows() != data.num_rows())
        throw QueryError("imputed table has " + std::to_string(imputed->num_rows()) + " rows, expected " +
                         std::to_string(data.num_rows()));
    std::vector<std::size_t> mapped;
    for (std::size_t c : columns) {
        const auto m2 = imputed->find_column(data.column(c).name);
        if (!m2) throw QueryError("imputed table lacks column \"" + data.column(c).name + "\"");
        mapped.push_back(*m2);
    }
    return similarity_heatmap(impute_median(*imputed, mapped, true), m, std::move(labels));
}

}  // namespace relquery::app
