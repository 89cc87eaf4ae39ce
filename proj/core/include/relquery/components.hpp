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
#include <string>
#include <variant>
#include <vector>

#include "relquery/table.hpp"

namespace relquery {

// Hyperparameters, one struct per conjugate family.

struct BetaBernoulliHyper {
    double a = 1.0;
    double b = 1.0;
    bool operator==(const BetaBernoulliHyper&) const = default;
};

/// Symmetric Dirichlet with concentration `alpha` per symbol.
struct DirichletHyper {
    double alpha = 1.0;
    std::size_t arity = 2;
    bool operator==(const DirichletHyper&) const = default;
};

/// sigma^2 ~ InvGamma(nu/2, s/2), mu | sigma^2 ~ Normal(m, sigma^2 / r).
struct NormalInverseGammaHyper {
    double m = 0.0;
    double r = 1.0;
    double s = 1.0;
    double nu = 1.0;
    bool operator==(const NormalInverseGammaHyper&) const = default;
};

/// lambda ~ Gamma(shape, rate).
struct GammaPoissonHyper {
    double shape = 1.0;
    double rate = 1.0;
    bool operator==(const GammaPoissonHyper&) const = default;
};

using Hyperparams =
    std::variant<BetaBernoulliHyper, DirichletHyper, NormalInverseGammaHyper, GammaPoissonHyper>;

// Sufficient statistics, in the same variant order as Hyperparams.

struct BernoulliStats {
    std::uint64_t n = 0;
    std::uint64_t heads = 0;
    bool operator==(const BernoulliStats&) const = default;
};

struct MultinomialStats {
    std::uint64_t n = 0;
    std::vector<std::uint64_t> counts;
    bool operator==(const MultinomialStats&) const = default;
};

struct NormalStats {
    std::uint64_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    bool operator==(const NormalStats&) const = default;
};

struct PoissonStats {
    std::uint64_t n = 0;
    std::uint64_t sum = 0;
    double sum_log_factorial = 0.0;
    bool operator==(const PoissonStats&) const = default;
};

using SuffStats = std::variant<BernoulliStats, MultinomialStats, NormalStats, PoissonStats>;

/// Default hyperparameters for a column, scaled to its observed values.
Hyperparams default_hyperparams(const DataTable& table, std::size_t col);

/// Empty statistics of the family selected by `hyper`.
SuffStats empty_stats(const Hyperparams& hyper);

std::uint64_t stats_count(const SuffStats& stats);

/// log M(x_1..x_n); 0 for empty stats. Throws ModelError on family mismatch.
double log_marginal(const SuffStats& stats, const Hyperparams& hyper);

/// log p(x | data) = log_marginal(stats + x) - log_marginal(stats), in O(1).
double log_predictive(double x, const SuffStats& stats, const Hyperparams& hyper);

void incorporate_value(SuffStats& stats, double x);
/// Throws ModelError when the statistics are empty.
void unincorporate_value(SuffStats& stats, double x);

/// Throws SchemaError when `x` is outside the family's domain.
void check_domain(double x, const Hyperparams& hyper);

/// Named coordinates of a hyperparameter vector, for grid Gibbs and storage.
std::vector<std::string> hyper_names(const Hyperparams& hyper);
std::vector<double> hyper_values(const Hyperparams& hyper);
void set_hyper_value(Hyperparams& hyper, std::size_t index, double value);
/// Throws SchemaError unless every scale parameter is strictly positive.
void check_hyperparams(const Hyperparams& hyper);

}  // namespace relquery
