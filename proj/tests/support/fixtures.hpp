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
#include <functional>
#include <string>
#include <vector>

#include "relquery/crosscat.hpp"
#include "relquery/ensemble.hpp"
#include "relquery/table.hpp"

namespace relquery::testing {

/// Table with a rowid key and the given columns; `cells[r][c]`.
DataTable make_table(std::vector<ColumnSchema> columns, const std::vector<std::vector<Cell>>& cells);

DataTable binary_table(const std::vector<std::vector<Cell>>& cells);

/// Two independent column blocks of `cols_per_block` numerical columns, each
/// with `clusters` well separated row clusters; `truth_cluster[b][r]` is the
/// planted cluster of row r in block b and `truth_block[c]` the block of c.
struct PlantedFixture {
    DataTable table;
    std::vector<std::size_t> truth_block;
    std::vector<std::vector<std::size_t>> truth_cluster;
};
PlantedFixture planted_fixture(std::size_t rows, std::size_t cols_per_block, std::size_t clusters,
                               std::uint64_t seed);

/// Random valid state over `table` (prior draw with random concentrations).
CrossCatState random_state(const DataTable& table, Rng& rng);

/// Ensemble of `h` prior draws followed by `sweeps` analysis iterations.
Ensemble random_ensemble(const DataTable& table, std::size_t h, std::uint64_t seed, std::uint64_t sweeps = 0);

/// Wraps hand-built states into an ensemble over `table`.
Ensemble ensemble_of(const DataTable& table, std::vector<CrossCatState> states, std::uint64_t seed = 1);

/// Every set partition of {0..n-1} as canonical label vectors.
std::vector<std::vector<std::uint32_t>> set_partitions(std::size_t n);

// Independent closed forms and quadratures, written without the library.

double oracle_log_beta(double a, double b);
double oracle_bb_log_marginal(std::uint64_t heads, std::uint64_t n, double a, double b);
/// Midpoint-rule integral of theta^h (1-theta)^(n-h) Beta(theta; a, b).
double quadrature_bb_marginal(std::uint64_t heads, std::uint64_t n, double a, double b);
double oracle_dm_log_marginal(const std::vector<std::uint64_t>& counts, double alpha);
/// Student-t density of one value under sigma^2 ~ IG(nu/2, s/2), mu ~ N(m, sigma^2/r).
double oracle_nig_log_predictive_prior(double x, double m, double r, double s, double nu);
/// Grid integral over (mu, sigma^2) of the likelihood of `xs` under the prior.
double quadrature_nig_log_marginal(const std::vector<double>& xs, double m, double r, double s, double nu);
/// Quadrature over lambda of prod Poisson(x | lambda) Gamma(lambda; shape, rate).
double quadrature_gp_log_marginal(const std::vector<std::uint64_t>& xs, double shape, double rate);
/// log CRP probability of a labelled partition.
double oracle_crp_log(const std::vector<std::uint32_t>& labels, double alpha);

/// Source directory of the repository, for data fixtures.
std::string source_dir();

}  // namespace relquery::testing
