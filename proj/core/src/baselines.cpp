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
#include "relquery/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "relquery/components.hpp"
#include "relquery/errors.hpp"

namespace relquery {

namespace {

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

VectorView impute_median(const DataTable& table, const std::vector<std::size_t>& columns, bool standardize) {
    const std::size_t n = table.num_rows();
    VectorView view;
    view.columns = columns;
    view.standardized = standardize;
    view.rows.assign(n, {});
    for (auto c : columns) {
        const ColumnSchema& schema = table.column(c);
        const auto observed = table.column_observed_rows(c);
        if (observed.empty()) throw SchemaError("column \"" + schema.name + "\" has no present values to impute from");
        if (schema.type.is_discrete()) {
            std::vector<std::size_t> freq(schema.type.arity, 0);
            for (auto r : observed) ++freq[static_cast<std::size_t>(table.value(r, c))];
            const auto mode = static_cast<double>(std::max_element(freq.begin(), freq.end()) - freq.begin());
            if (schema.type.kind == StatKind::binary) {
                view.features.push_back(schema.name);
                for (RowId r = 0; r < n; ++r) view.rows[r].push_back(table.is_present(r, c) ? table.value(r, c) : mode);
            } else {
                for (std::size_t s = 0; s < schema.type.arity; ++s) {
                    const std::string sym = s < schema.codebook.size() ? schema.codebook.symbol(static_cast<std::uint32_t>(s))
                                                                        : std::to_string(s);
                    view.features.push_back(schema.name + "=" + sym);
                }
                for (RowId r = 0; r < n; ++r) {
                    const auto code = static_cast<std::size_t>(table.is_present(r, c) ? table.value(r, c) : mode);
                    for (std::size_t s = 0; s < schema.type.arity; ++s) view.rows[r].push_back(s == code ? 1.0 : 0.0);
                }
            }
            continue;
        }
        std::vector<double> xs;
        for (auto r : observed) xs.push_back(table.value(r, c));
        const double med = median_of(xs);
        std::vector<double> filled(n);
        for (RowId r = 0; r < n; ++r) filled[r] = table.is_present(r, c) ? table.value(r, c) : med;
        if (standardize) {
            const double mean = std::accumulate(filled.begin(), filled.end(), 0.0) / static_cast<double>(n);
            double var = 0;
            for (double x : filled) var += (x - mean) * (x - mean);
            const double sd = std::sqrt(var / static_cast<double>(n));
            for (double& x : filled) x = sd > 0 ? (x - mean) / sd : x - mean;
        }
        view.features.push_back(schema.name);
        for (RowId r = 0; r < n; ++r) view.rows[r].push_back(filled[r]);
    }
    return view;
}

std::vector<std::size_t> select_context_columns(const Ensemble& ensemble, std::size_t context, std::size_t k) {
    const auto dep = pairwise_dependence(ensemble);
    if (context >= dep.size()) throw ModelError("unknown context column");
    std::vector<std::size_t> cols(dep.size());
    std::iota(cols.begin(), cols.end(), 0);
    std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
        // The context column always leads, then descending dependence.
        if ((a == context) != (b == context)) return a == context;
        return dep[context][a] > dep[context][b];
    });
    cols.resize(std::min(k, cols.size()));
    return cols;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("vector length mismatch");
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0 || nv == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double euclidean_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("vector length mismatch");
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
    return std::sqrt(s);
}

double bray_curtis(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("vector length mismatch");
    double lo = 0;
    for (std::size_t i = 0; i < u.size(); ++i) lo = std::min({lo, u[i], v[i]});
    double num = 0, den = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        num += std::fabs(u[i] - v[i]);
        den += (u[i] - lo) + (v[i] - lo);
    }
    return den > 0 ? num / den : 0.0;
}

double log_bayes_sets_score(const DataTable& table, std::span<const RowId> query, RowId candidate) {
    if (candidate >= table.num_rows()) throw ModelError("candidate row does not exist");
    double score = 0;
    for (std::size_t c = 0; c < table.num_cols(); ++c) {
        if (!table.is_present(candidate, c)) continue;
        const Hyperparams hyper = default_hyperparams(table, c);
        SuffStats stats = empty_stats(hyper);
        for (auto q : query) {
            if (q >= table.num_rows()) throw ModelError("query row does not exist");
            if (table.is_present(q, c)) incorporate_value(stats, table.value(q, c));
        }
        const double x = table.value(candidate, c);
        score += log_predictive(x, stats, hyper) - log_predictive(x, empty_stats(hyper), hyper);
    }
    return score;
}

double bayes_sets_score(const DataTable& table, std::span<const RowId> query, RowId candidate) {
    return std::exp(log_bayes_sets_score(table, query, candidate));
}

Measure parse_measure(std::string_view name) {
    if (name == "relevance") return Measure::relevance;
    if (name == "cosine") return Measure::cosine;
    if (name == "euclidean") return Measure::euclidean;
    if (name == "braycurtis" || name == "bray_curtis" || name == "bray-curtis") return Measure::bray_curtis;
    throw QueryError("unknown measure '" + std::string(name) + "' (relevance, cosine, euclidean, braycurtis)");
}

std::string to_string(Measure measure) {
    switch (measure) {
        case Measure::relevance: return "relevance";
        case Measure::cosine: return "cosine";
        case Measure::euclidean: return "euclidean";
        case Measure::bray_curtis: return "braycurtis";
    }
    return "unknown";
}

namespace {

std::vector<std::string> row_labels(const DataTable& table) {
    std::vector<std::string> out;
    for (RowId r = 0; r < table.num_rows(); ++r) out.push_back(table.row_key(r));
    return out;
}

}  // namespace

Heatmap relevance_heatmap(const Ensemble& ensemble, CoOccurrenceCache& cache, const DataTable& table,
                          std::size_t context) {
    check_table(ensemble, table);
    const std::size_t n = table.num_rows();
    Heatmap out;
    out.matrix.assign(n, std::vector<double>(n, 0.0));
    for (RowId i = 0; i < n; ++i) {
        RelevanceQuery q;
        q.existing = {i};
        q.context = context;
        const auto result = relevance_fast(ensemble, cache, q);
        for (RowId j = 0; j < n; ++j) out.matrix[i][j] = result.probability(j);
    }
    out.order = single_linkage_order(out.matrix);
    out.labels = row_labels(table);
    return out;
}

Heatmap similarity_heatmap(const VectorView& view, Measure measure, std::vector<std::string> labels) {
    if (measure == Measure::relevance) throw QueryError("relevance heatmaps need an ensemble");
    const std::size_t n = view.rows.size();
    Heatmap out;
    out.matrix.assign(n, std::vector<double>(n, 1.0));
    bool negative = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0;
            switch (measure) {
                case Measure::cosine: s = cosine_similarity(view.rows[i], view.rows[j]); break;
                case Measure::euclidean: s = 1.0 / (1.0 + euclidean_distance(view.rows[i], view.rows[j])); break;
                default: s = 1.0 / (1.0 + bray_curtis(view.rows[i], view.rows[j])); break;
            }
            negative = negative || s < 0;
            out.matrix[i][j] = out.matrix[j][i] = s;
        }
    }
    if (negative) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) out.matrix[i][j] = (1.0 + out.matrix[i][j]) / 2.0;
            }
        }
    }
    out.order = single_linkage_order(out.matrix);
    out.labels = std::move(labels);
    return out;
}

std::vector<std::size_t> single_linkage_order(const std::vector<std::vector<double>>& similarity) {
    const std::size_t n = similarity.size();
    if (n == 0) return {};
    // Prim's MST over d = 1 - s; its edges sorted ascending are the
    // single-linkage merges.
    struct Edge {
        double d;
        std::size_t a, b;
    };
    std::vector<Edge> edges;
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, 0);
    best[0] = 0;
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
        }
        in_tree[u] = true;
        if (it > 0) edges.push_back({best[u], std::min(u, parent[u]), std::max(u, parent[u])});
        for (std::size_t v = 0; v < n; ++v) {
            const double d = 1.0 - 0.5 * (similarity[u][v] + similarity[v][u]);
            if (!in_tree[v] && d < best[v]) {
                best[v] = d;
                parent[v] = u;
            }
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.d < y.d; });
    std::vector<std::size_t> root(n);
    std::iota(root.begin(), root.end(), 0);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    auto find = [&](std::size_t x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
    };
    for (const auto& e : edges) {
        std::size_t ra = find(e.a), rb = find(e.b);
        if (ra == rb) continue;
        if (members[rb].front() < members[ra].front()) std::swap(ra, rb);
        members[ra].insert(members[ra].end(), members[rb].begin(), members[rb].end());
        members[rb].clear();
        root[rb] = ra;
    }
    return members[find(0)];
}

double fraction_below(const std::vector<std::vector<double>>& matrix, double threshold) {
    const std::size_t n = matrix.size();
    if (n < 2) return 0.0;
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && matrix[i][j] < threshold) ++below;
        }
    }
    return static_cast<double>(below) / static_cast<double>(n * (n - 1));
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    return out + "\"";
}

}  // namespace

void write_heatmap_csv(const Heatmap& heatmap, std::ostream& out) {
    out << "row";
    for (auto j : heatmap.order) out << ',' << csv_escape(heatmap.labels.at(j));
    out << '\n';
    for (auto i : heatmap.order) {
        out << csv_escape(heatmap.labels.at(i));
        for (auto j : heatmap.order) out << ',' << heatmap.matrix[i][j];
        out << '\n';
    }
}

void write_heatmap_ppm(const Heatmap& heatmap, std::ostream& out, std::size_t cell) {
    const std::size_t n = heatmap.order.size();
    cell = std::max<std::size_t>(cell, 1);
    const std::size_t side = n * cell;
    out << "P6\n" << side << ' ' << side << "\n255\n";
    std::vector<unsigned char> line(side * 3);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = std::clamp(heatmap.matrix[heatmap.order[i]][heatmap.order[j]], 0.0, 1.0);
            const auto r = static_cast<unsigned char>(std::lround(255.0 * (1.0 - v) + 8.0 * v));
            const auto g = static_cast<unsigned char>(std::lround(255.0 * (1.0 - v) + 48.0 * v));
            const auto b = static_cast<unsigned char>(std::lround(255.0 * (1.0 - v) + 107.0 * v));
            for (std::size_t x = 0; x < cell; ++x) {
                line[(j * cell + x) * 3 + 0] = r;
                line[(j * cell + x) * 3 + 1] = g;
                line[(j * cell + x) * 3 + 2] = b;
            }
        }
        for (std::size_t y = 0; y < cell; ++y) out.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(line.size()));
    }
}

}  // namespace relquery
