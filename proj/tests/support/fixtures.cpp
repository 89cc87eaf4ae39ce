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
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace relquery::testing {

DataTable make_table(std::vector<ColumnSchema> columns, const std::vector<std::vector<Cell>>& cells) {
    TableBuilder builder(std::move(columns));
    for (const auto& row : cells) builder.add_row(row);
    return std::move(builder).build();
}

DataTable binary_table(const std::vector<std::vector<Cell>>& cells) {
    std::vector<ColumnSchema> cols;
    for (std::size_t c = 0; c < cells.at(0).size(); ++c)
        cols.push_back({"b" + std::to_string(c), StatType::binary(), Codebook({"0", "1"})});
    return make_table(std::move(cols), cells);
}

PlantedFixture planted_fixture(std::size_t rows, std::size_t cols_per_block, std::size_t clusters,
                               std::uint64_t seed) {
    Rng rng(seed);
    PlantedFixture f;
    f.truth_cluster.assign(2, std::vector<std::size_t>(rows));
    for (std::size_t b = 0; b < 2; ++b) {
        // Shuffled balanced assignment, independent across blocks.
        std::vector<std::size_t> z(rows);
        for (std::size_t r = 0; r < rows; ++r) z[r] = r % clusters;
        for (std::size_t i = rows; i > 1; --i) std::swap(z[i - 1], z[rng.uniform_index(i)]);
        f.truth_cluster[b] = z;
    }
    std::vector<ColumnSchema> cols;
    for (std::size_t c = 0; c < 2 * cols_per_block; ++c) {
        cols.push_back({"x" + std::to_string(c), StatType::numerical(), {}});
        f.truth_block.push_back(c % 2);  // interleaved so block structure is not contiguous
    }
    // Cluster means differ per column so every column separates the clusters.
    std::vector<std::vector<double>> means(2 * cols_per_block, std::vector<double>(clusters));
    for (auto& m : means)
        for (std::size_t k = 0; k < clusters; ++k) m[k] = 10.0 * static_cast<double>(k) + 3.0 * rng.normal();
    std::vector<std::vector<Cell>> cells(rows, std::vector<Cell>(2 * cols_per_block));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 2 * cols_per_block; ++c) {
            const std::size_t k = f.truth_cluster[f.truth_block[c]][r];
            cells[r][c] = means[c][k] + rng.normal();
        }
    }
    f.table = make_table(std::move(cols), cells);
    return f;
}

CrossCatState random_state(const DataTable& table, Rng& rng) {
    const double a0 = 0.5 + 2.0 * rng.uniform();
    const double a1 = 0.5 + 2.0 * rng.uniform();
    return prior_sample(table, a0, a1, rng);
}

Ensemble random_ensemble(const DataTable& table, std::size_t h, std::uint64_t seed, std::uint64_t sweeps) {
    Ensemble e = initialize_ensemble(table, h, seed);
    if (sweeps > 0) {
        AnalyzeOptions opts;
        opts.iterations = sweeps;
        analyze(e, table, opts);
    }
    return e;
}

Ensemble ensemble_of(const DataTable& table, std::vector<CrossCatState> states, std::uint64_t seed) {
    Ensemble e;
    e.table_fingerprint = table.fingerprint();
    for (std::size_t h = 0; h < states.size(); ++h) {
        e.seeds.push_back(state_seed(seed, h));
        e.rng_states.push_back(Rng(e.seeds.back()).state());
    }
    e.states = std::move(states);
    return e;
}

std::vector<std::vector<std::uint32_t>> set_partitions(std::size_t n) {
    // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
    std::vector<std::vector<std::uint32_t>> out;
    std::vector<std::uint32_t> a(n, 0);
    std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t next_label) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (std::uint32_t l = 0; l <= next_label; ++l) {
            a[i] = l;
            rec(i + 1, l == next_label ? next_label + 1 : next_label);
        }
    };
    rec(0, 0);
    return out;
}

double oracle_log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double oracle_bb_log_marginal(std::uint64_t heads, std::uint64_t n, double a, double b) {
    return oracle_log_beta(a + static_cast<double>(heads), b + static_cast<double>(n - heads)) - oracle_log_beta(a, b);
}

double quadrature_bb_marginal(std::uint64_t heads, std::uint64_t n, double a, double b) {
    const int steps = 200000;
    const double norm = std::exp(oracle_log_beta(a, b));
    double sum = 0;
    for (int i = 0; i < steps; ++i) {
        const double t = (i + 0.5) / steps;
        sum += std::pow(t, static_cast<double>(heads) + a - 1) * std::pow(1 - t, static_cast<double>(n - heads) + b - 1);
    }
    return sum / steps / norm;
}

double oracle_dm_log_marginal(const std::vector<std::uint64_t>& counts, double alpha) {
    double n = 0, out = 0;
    for (auto c : counts) {
        n += static_cast<double>(c);
        out += std::lgamma(alpha + static_cast<double>(c)) - std::lgamma(alpha);
    }
    const double k = static_cast<double>(counts.size());
    return out + std::lgamma(k * alpha) - std::lgamma(k * alpha + n);
}

double oracle_nig_log_predictive_prior(double x, double m, double r, double s, double nu) {
    // Student-t with nu dof, location m, squared scale s (r+1) / (r nu).
    const double scale2 = s * (r + 1.0) / (r * nu);
    const double z = (x - m) * (x - m) / scale2;
    return std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * std::numbers::pi * scale2) -
           (nu + 1) / 2 * std::log1p(z / nu);
}

double quadrature_nig_log_marginal(const std::vector<double>& xs, double m, double r, double s, double nu) {
    // Integrate over mu and log sigma^2 on a fine grid.
    const int nmu = 1200, nls = 1200;
    const double mu_lo = m - 40, mu_hi = m + 40;
    const double ls_lo = -12, ls_hi = 12;
    const double dmu = (mu_hi - mu_lo) / nmu, dls = (ls_hi - ls_lo) / nls;
    const double a = nu / 2, b = s / 2;
    double total = 0;
    for (int i = 0; i < nls; ++i) {
        const double ls = ls_lo + (i + 0.5) * dls;
        const double v = std::exp(ls);
        // Inverse-gamma density in v, times the Jacobian dv = v d(log v).
        const double log_ig = a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(v) - b / v + std::log(v);
        for (int j = 0; j < nmu; ++j) {
            const double mu = mu_lo + (j + 0.5) * dmu;
            double lp = log_ig - 0.5 * std::log(2 * std::numbers::pi * v / r) - r * (mu - m) * (mu - m) / (2 * v);
            for (double x : xs) lp += -0.5 * std::log(2 * std::numbers::pi * v) - (x - mu) * (x - mu) / (2 * v);
            total += std::exp(lp) * dmu * dls;
        }
    }
    return std::log(total);
}

double quadrature_gp_log_marginal(const std::vector<std::uint64_t>& xs, double shape, double rate) {
    const int steps = 400000;
    const double hi = 200.0 / rate;
    double total = 0;
    for (int i = 0; i < steps; ++i) {
        const double lam = (i + 0.5) * hi / steps;
        double lp = shape * std::log(rate) - std::lgamma(shape) + (shape - 1) * std::log(lam) - rate * lam;
        for (auto x : xs) lp += static_cast<double>(x) * std::log(lam) - lam - std::lgamma(static_cast<double>(x) + 1);
        total += std::exp(lp) * hi / steps;
    }
    return std::log(total);
}

double oracle_crp_log(const std::vector<std::uint32_t>& labels, double alpha) {
    std::map<std::uint32_t, double> sizes;
    for (auto l : labels) sizes[l] += 1;
    double out = static_cast<double>(sizes.size()) * std::log(alpha) + std::lgamma(alpha) -
                 std::lgamma(alpha + static_cast<double>(labels.size()));
    for (const auto& [l, n] : sizes) out += std::lgamma(n);
    return out;
}

std::string source_dir() { return RELQUERY_SOURCE_DIR; }

}  // namespace relquery::testing
