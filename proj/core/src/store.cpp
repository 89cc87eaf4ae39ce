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
#include "relquery/store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relquery/errors.hpp"

namespace relquery {

using nlohmann::json;

std::vector<std::optional<std::string>> RawTable::column(std::size_t col) const {
    std::vector<std::optional<std::string>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.at(col));
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing_text(std::string_view s) {
    s = trim(s);
    return s.empty() || s == "NaN";
}

}  // namespace

RawTable read_csv(std::istream& in, char delimiter) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        // A line with nothing on it is skipped.
        if (!(record.empty() && !field_started && field.empty())) {
            end_field();
            records.push_back(std::move(record));
        }
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            if (!trim(field).empty())
                throw StoreError("CSV line " + std::to_string(line) + ": quote inside an unquoted field");
            field.clear();
            in_quotes = true;
            field_started = true;
        } else if (ch == delimiter) {
            end_field();
            field_started = true;
        } else if (ch == '\r') {
            continue;
        } else if (ch == '\n') {
            end_record();
            ++line;
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes) throw StoreError("CSV: unterminated quoted field");
    end_record();

    if (records.empty()) throw StoreError("CSV has no header row");
    RawTable raw;
    std::set<std::string> seen;
    for (auto& name : records.front()) {
        std::string trimmed(trim(name));
        if (trimmed.empty()) throw StoreError("CSV header has an empty column name");
        if (!seen.insert(trimmed).second) throw StoreError("duplicate column name \"" + trimmed + "\" in CSV header");
        raw.header.push_back(std::move(trimmed));
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != raw.header.size())
            throw StoreError("CSV record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                             " fields, expected " + std::to_string(raw.header.size()));
        std::vector<std::optional<std::string>> row;
        row.reserve(records[r].size());
        for (auto& f : records[r]) {
            if (is_missing_text(f))
                row.emplace_back(std::nullopt);
            else
                row.emplace_back(std::string(trim(f)));
        }
        raw.rows.push_back(std::move(row));
    }
    return raw;
}

RawTable read_csv_file(const std::string& path, char delimiter) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot open '" + path + "'");
    return read_csv(in, delimiter);
}

std::optional<double> parse_number(std::string_view text, bool thousands_separators) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    std::string cleaned;
    if (thousands_separators && text.find(',') != std::string_view::npos) {
        // Groups of exactly three digits after the first comma.
        const std::size_t dot = text.find('.');
        const std::string_view whole = text.substr(0, dot);
        std::size_t start = whole.starts_with('-') ? 1 : 0;
        const std::size_t first = whole.find(',');
        if (first == start || first - start > 3) return std::nullopt;
        for (std::size_t i = first; i < whole.size(); i += 4) {
            if (whole[i] != ',' || i + 4 > whole.size()) return std::nullopt;
        }
        for (char ch : text) {
            if (ch != ',') cleaned.push_back(ch);
        }
        text = cleaned;
    }
    if (text.starts_with('+')) text.remove_prefix(1);
    double value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

StatType guess_stat_type(const std::vector<std::optional<std::string>>& values, const TypeGuessOptions& options) {
    std::set<std::string> distinct;
    for (const auto& v : values) {
        if (v) distinct.insert(*v);
    }
    if (distinct.empty()) throw SchemaError("column has no present values; its type cannot be guessed");
    bool numeric = true;
    bool integral = true;
    double max_value = 0;
    std::set<double> distinct_numbers;
    for (const auto& s : distinct) {
        const auto x = parse_number(s, options.thousands_separators);
        if (!x) {
            numeric = false;
            break;
        }
        distinct_numbers.insert(*x);
        max_value = std::max(max_value, *x);
        const bool looks_integer = s.find_first_of(".eE") == std::string::npos;
        if (!looks_integer || *x < 0 || *x != std::floor(*x)) integral = false;
    }
    // Two symbols are binary unless they are numbers other than 0/1.
    if (!numeric) return distinct.size() <= 2 ? StatType::binary() : StatType::categorical(distinct.size());
    if (integral && distinct_numbers.size() <= options.count_max_distinct)
        return max_value > 1 ? StatType::count() : StatType::binary();
    return StatType::numerical();
}

namespace {

Codebook sorted_codebook(const std::vector<std::optional<std::string>>& values) {
    std::set<std::string> distinct;
    for (const auto& v : values) {
        if (v) distinct.insert(*v);
    }
    std::vector<std::string> symbols(distinct.begin(), distinct.end());
    std::vector<std::pair<double, std::string>> numbers;
    for (const auto& s : symbols) {
        const auto x = parse_number(s);
        if (!x) {
            numbers.clear();
            break;
        }
        numbers.emplace_back(*x, s);
    }
    if (!numbers.empty()) {
        std::stable_sort(numbers.begin(), numbers.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        symbols.clear();
        for (auto& [x, s] : numbers) symbols.push_back(s);
    }
    return Codebook(symbols);
}

}  // namespace

DataTable build_table(const RawTable& raw, const CsvOptions& options) {
    std::optional<std::size_t> key_col;
    if (!options.key_column.empty()) {
        const auto it = std::find(raw.header.begin(), raw.header.end(), options.key_column);
        if (it == raw.header.end()) throw SchemaError("key column \"" + options.key_column + "\" not in CSV header");
        key_col = static_cast<std::size_t>(it - raw.header.begin());
    }
    for (const auto& [name, type] : options.overrides) {
        if (std::find(raw.header.begin(), raw.header.end(), name) == raw.header.end() || name == options.key_column)
            throw SchemaError("no modeled column named \"" + name + "\"");
    }

    std::vector<std::size_t> source;
    std::vector<ColumnSchema> schema;
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
        if (key_col && c == *key_col) continue;
        const auto values = raw.column(c);
        ColumnSchema col;
        col.name = raw.header[c];
        const auto ov = options.overrides.find(col.name);
        try {
            col.type = ov != options.overrides.end() ? ov->second : guess_stat_type(values, options.guess);
        } catch (const SchemaError& e) {
            throw SchemaError("column \"" + col.name + "\": " + e.what());
        }
        if (col.type.is_discrete()) {
            col.codebook = sorted_codebook(values);
            if (col.type.kind == StatKind::categorical && col.type.arity == 0)
                col.type.arity = std::max<std::size_t>(col.codebook.size(), 2);
            if (col.codebook.size() > col.type.arity)
                throw SchemaError("column \"" + col.name + "\" has " + std::to_string(col.codebook.size()) +
                                  " distinct values, more than " + to_string(col.type) + " allows");
        }
        source.push_back(c);
        schema.push_back(std::move(col));
    }
    if (schema.empty()) throw SchemaError("table has no modeled columns");

    TableBuilder builder(schema);
    if (key_col) builder.with_key(options.key_column);
    std::vector<Cell> cells(schema.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto& field = raw.rows[r][source[j]];
            if (!field) {
                cells[j] = std::nullopt;
                continue;
            }
            if (schema[j].type.is_discrete()) {
                cells[j] = static_cast<double>(*schema[j].codebook.code_of(*field));
            } else {
                const auto x = parse_number(*field, options.guess.thousands_separators);
                if (!x)
                    throw SchemaError("column \"" + schema[j].name + "\", record " + std::to_string(r + 1) +
                                      ": '" + *field + "' is not a number");
                cells[j] = *x;
            }
        }
        std::string key;
        if (key_col) {
            const auto& k = raw.rows[r][*key_col];
            if (!k) throw SchemaError("record " + std::to_string(r + 1) + " has an empty key");
            key = *k;
        }
        builder.add_row(cells, std::move(key));
    }
    return std::move(builder).build();
}

DataTable load_csv(const std::string& path, const CsvOptions& options) {
    return build_table(read_csv_file(path, options.delimiter), options);
}

namespace {

std::string csv_field(const std::string& s) {
    const bool quote = s.find_first_of(",\"\r\n") != std::string::npos ||
                       (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!quote) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::uint64_t parse_hex64(const json& j) {
    const std::string s = j.get<std::string>();
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw StoreError("malformed hex value '" + s + "'");
    return x;
}

const char* family_name(const Hyperparams& hyper) {
    switch (hyper.index()) {
        case 0: return "beta_bernoulli";
        case 1: return "dirichlet_multinomial";
        case 2: return "normal_inverse_gamma";
        default: return "gamma_poisson";
    }
}

}  // namespace

void write_csv(const DataTable& table, std::ostream& out) {
    bool first = true;
    auto sep = [&] {
        if (!first) out << ',';
        first = false;
    };
    if (table.has_key()) {
        sep();
        out << csv_field(table.key_name());
    }
    for (const auto& col : table.columns()) {
        sep();
        out << csv_field(col.name);
    }
    out << '\n';
    for (RowId r = 0; r < table.num_rows(); ++r) {
        first = true;
        if (table.has_key()) {
            sep();
            out << csv_field(table.row_key(r));
        }
        for (std::size_t c = 0; c < table.num_cols(); ++c) {
            sep();
            out << csv_field(table.format_cell(r, c));
        }
        out << '\n';
    }
}

std::string ensemble_to_json(const Ensemble& ensemble) {
    json doc;
    doc["format"] = "relquery-ensemble";
    doc["version"] = kEnsembleFormatVersion;
    doc["table_fingerprint"] = hex64(ensemble.table_fingerprint);
    doc["analyze_iterations"] = ensemble.analyze_iterations;
    json states = json::array();
    for (std::size_t h = 0; h < ensemble.size(); ++h) {
        const CrossCatState& state = ensemble.states[h];
        json s;
        s["seed"] = hex64(ensemble.seeds[h]);
        const auto& rs = ensemble.rng_states[h];
        s["rng"] = {{"key", hex64(rs.key)}, {"counter", hex64(rs.counter)}, {"lane", rs.lane}};
        s["alpha0"] = state.alpha0();
        json hypers = json::array();
        for (const auto& hyper : state.hypers())
            hypers.push_back({{"family", family_name(hyper)}, {"values", hyper_values(hyper)}});
        s["hypers"] = std::move(hypers);
        json blocks = json::array();
        for (const auto& block : state.blocks()) {
            blocks.push_back({{"columns", block.columns},
                              {"alpha", block.alpha},
                              {"num_slots", block.clusters.size()},
                              {"assignments", block.assignments}});
        }
        s["blocks"] = std::move(blocks);
        states.push_back(std::move(s));
    }
    doc["states"] = std::move(states);
    return doc.dump(1);
}

Ensemble ensemble_from_json(const std::string& text, const DataTable& table) {
    Ensemble ensemble;
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "relquery-ensemble") throw StoreError("not an ensemble file");
        const int version = doc.at("version").get<int>();
        if (version != kEnsembleFormatVersion)
            throw StoreError("unsupported ensemble format version " + std::to_string(version));
        ensemble.table_fingerprint = parse_hex64(doc.at("table_fingerprint"));
        if (ensemble.table_fingerprint != table.fingerprint())
            throw StoreError("ensemble was saved against a different table (fingerprint mismatch)");
        ensemble.analyze_iterations = doc.at("analyze_iterations").get<std::uint64_t>();
        for (const auto& s : doc.at("states")) {
            std::vector<Hyperparams> hypers;
            const auto& hs = s.at("hypers");
            if (hs.size() != table.num_cols()) throw StoreError("hyperparameter count differs from column count");
            for (std::size_t c = 0; c < table.num_cols(); ++c) {
                Hyperparams hyper = default_hyperparams(table, c);
                if (hs[c].at("family").get<std::string>() != family_name(hyper))
                    throw StoreError("hyperparameter family mismatch for column \"" + table.column(c).name + "\"");
                const auto values = hs[c].at("values").get<std::vector<double>>();
                if (values.size() != hyper_values(hyper).size()) throw StoreError("wrong hyperparameter arity");
                for (std::size_t i = 0; i < values.size(); ++i) set_hyper_value(hyper, i, values[i]);
                hypers.push_back(hyper);
            }
            std::vector<BlockLayout> layout;
            for (const auto& b : s.at("blocks")) {
                BlockLayout l;
                l.columns = b.at("columns").get<std::vector<std::size_t>>();
                l.alpha = b.at("alpha").get<double>();
                l.num_slots = b.at("num_slots").get<std::size_t>();
                l.assignments = b.at("assignments").get<std::vector<std::uint32_t>>();
                layout.push_back(std::move(l));
            }
            CrossCatState state =
                CrossCatState::from_layout(table, std::move(layout), s.at("alpha0").get<double>(), std::move(hypers));
            state.validate(table);
            ensemble.states.push_back(std::move(state));
            ensemble.seeds.push_back(parse_hex64(s.at("seed")));
            const auto& rs = s.at("rng");
            ensemble.rng_states.push_back(
                Rng::State{parse_hex64(rs.at("key")), parse_hex64(rs.at("counter")), rs.at("lane").get<std::uint32_t>()});
        }
    } catch (const json::exception& e) {
        throw StoreError(std::string("corrupted ensemble file: ") + e.what());
    } catch (const ModelError& e) {
        throw StoreError(std::string("corrupted ensemble file: ") + e.what());
    } catch (const SchemaError& e) {
        throw StoreError(std::string("corrupted ensemble file: ") + e.what());
    }
    if (ensemble.states.empty()) throw StoreError("ensemble file holds no models");
    return ensemble;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write '" + path + "'");
    out << text;
    if (!out) throw StoreError("write to '" + path + "' failed");
}

void save_ensemble(const Ensemble& ensemble, const std::string& path) {
    write_text_file(path, ensemble_to_json(ensemble));
}

Ensemble load_ensemble(const std::string& path, const DataTable& table) {
    return ensemble_from_json(read_text_file(path), table);
}

std::string manifest_to_json(const SessionManifest& m) {
    json doc;
    doc["format"] = "relquery-session";
    doc["version"] = m.version;
    doc["table_name"] = m.table_name;
    doc["table_path"] = m.table_path;
    doc["table_fingerprint"] = hex64(m.table_fingerprint);
    doc["key_column"] = m.key_column;
    json schema = json::array();
    for (const auto& col : m.schema)
        schema.push_back({{"name", col.name}, {"type", to_string(col.type)}, {"codebook", col.codebook.symbols()}});
    doc["schema"] = std::move(schema);
    doc["population"] = m.population;
    doc["ensemble_path"] = m.ensemble_path;
    doc["analyze_history"] = m.analyze_history;
    doc["seed"] = hex64(m.seed);
    return doc.dump(1);
}

SessionManifest manifest_from_json(const std::string& text) {
    SessionManifest m;
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "relquery-session") throw StoreError("not a session manifest");
        m.version = doc.at("version").get<int>();
        if (m.version != 1) throw StoreError("unsupported session manifest version " + std::to_string(m.version));
        m.table_name = doc.at("table_name").get<std::string>();
        m.table_path = doc.at("table_path").get<std::string>();
        m.table_fingerprint = parse_hex64(doc.at("table_fingerprint"));
        m.key_column = doc.at("key_column").get<std::string>();
        for (const auto& col : doc.at("schema")) {
            ColumnSchema schema;
            schema.name = col.at("name").get<std::string>();
            schema.type = parse_stat_type(col.at("type").get<std::string>());
            schema.codebook = Codebook(col.at("codebook").get<std::vector<std::string>>());
            m.schema.push_back(std::move(schema));
        }
        m.population = doc.at("population").get<std::string>();
        m.ensemble_path = doc.at("ensemble_path").get<std::string>();
        m.analyze_history = doc.at("analyze_history").get<std::vector<std::uint64_t>>();
        m.seed = parse_hex64(doc.at("seed"));
    } catch (const json::exception& e) {
        throw StoreError(std::string("corrupted session manifest: ") + e.what());
    } catch (const SchemaError& e) {
        throw StoreError(std::string("corrupted session manifest: ") + e.what());
    }
    return m;
}

}  // namespace relquery
