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
#include "relquery/components.hpp"

#include <cmath>
#include <numbers>

#include "relquery/errors.hpp"

namespace relquery {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double lbeta(double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); }

template <class T>
const T& expect(const Hyperparams& hyper) {
    if (const T* h = std::get_if<T>(&hyper)) return *h;
    throw ModelError("sufficient statistics and hyperparameters belong to different families");
}

struct NormalPosterior {
    double m, r, s, nu;
};

NormalPosterior normal_posterior(const NormalStats& st, const NormalInverseGammaHyper& h) {
    if (st.n == 0) return {h.m, h.r, h.s, h.nu};
    const double n = static_cast<double>(st.n);
    const double mean = st.sum / n;
    const double scatter = std::max(0.0, st.sum_sq - n * mean * mean);
    const double r = h.r + n;
    const double m = (h.r * h.m + st.sum) / r;
    const double d = mean - h.m;
    const double s = h.s + scatter + (h.r * n / r) * d * d;
    return {m, r, s, h.nu + n};
}

double normal_log_z(double r, double s, double nu) {
    return 0.5 * kLogTwoPi - 0.5 * std::log(r) + std::lgamma(0.5 * nu) - 0.5 * nu * std::log(0.5 * s);
}

double log_factorial(std::uint64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

Hyperparams default_hyperparams(const DataTable& table, std::size_t col) {
    const ColumnSchema& schema = table.column(col);
    switch (schema.type.kind) {
        case StatKind::binary: return BetaBernoulliHyper{1.0, 1.0};
        case StatKind::categorical:
            return DirichletHyper{1.0 / static_cast<double>(schema.type.arity), schema.type.arity};
        case StatKind::numerical:
        case StatKind::count: break;
    }
    double n = 0, sum = 0, sum_sq = 0;
    for (RowId r = 0; r < table.num_rows(); ++r) {
        if (!table.is_present(r, col)) continue;
        const double x = table.value(r, col);
        n += 1;
        sum += x;
        sum_sq += x * x;
    }
    const double mean = n > 0 ? sum / n : 0.0;
    if (schema.type.kind == StatKind::count) {
        return GammaPoissonHyper{1.0, mean > 0 ? 1.0 / mean : 1.0};
    }
    const double variance = n > 0 ? std::max(0.0, sum_sq / n - mean * mean) : 0.0;
    return NormalInverseGammaHyper{mean, 1.0, variance > 0 ? variance : 1.0, 1.0};
}

SuffStats empty_stats(const Hyperparams& hyper) {
    switch (hyper.index()) {
        case 0: return BernoulliStats{};
        case 1: return MultinomialStats{0, std::vector<std::uint64_t>(std::get<DirichletHyper>(hyper).arity, 0)};
        case 2: return NormalStats{};
        default: return PoissonStats{};
    }
}

std::uint64_t stats_count(const SuffStats& stats) {
    return std::visit([](const auto& st) { return st.n; }, stats);
}

double log_marginal(const SuffStats& stats, const Hyperparams& hyper) {
    if (stats.index() != hyper.index())
        throw ModelError("sufficient statistics and hyperparameters belong to different families");
    if (stats_count(stats) == 0) return 0.0;
    switch (stats.index()) {
        case 0: {
            const auto& st = std::get<BernoulliStats>(stats);
            const auto& h = std::get<BetaBernoulliHyper>(hyper);
            const double heads = static_cast<double>(st.heads);
            const double tails = static_cast<double>(st.n - st.heads);
            return lbeta(h.a + heads, h.b + tails) - lbeta(h.a, h.b);
        }
        case 1: {
            const auto& st = std::get<MultinomialStats>(stats);
            const auto& h = std::get<DirichletHyper>(hyper);
            const double total = h.alpha * static_cast<double>(h.arity);
            double out = std::lgamma(total) - std::lgamma(total + static_cast<double>(st.n));
            const double base = std::lgamma(h.alpha);
            for (auto count : st.counts) {
                if (count > 0) out += std::lgamma(h.alpha + static_cast<double>(count)) - base;
            }
            return out;
        }
        case 2: {
            const auto& st = std::get<NormalStats>(stats);
            const auto& h = std::get<NormalInverseGammaHyper>(hyper);
            const NormalPosterior post = normal_posterior(st, h);
            return -0.5 * static_cast<double>(st.n) * kLogTwoPi + normal_log_z(post.r, post.s, post.nu) -
                   normal_log_z(h.r, h.s, h.nu);
        }
        default: {
            const auto& st = std::get<PoissonStats>(stats);
            const auto& h = std::get<GammaPoissonHyper>(hyper);
            const double total = static_cast<double>(st.sum);
            const double n = static_cast<double>(st.n);
            return -st.sum_log_factorial + h.shape * std::log(h.rate) - std::lgamma(h.shape) +
                   std::lgamma(h.shape + total) - (h.shape + total) * std::log(h.rate + n);
        }
    }
}

double log_predictive(double x, const SuffStats& stats, const Hyperparams& hyper) {
    if (stats.index() != hyper.index())
        throw ModelError("sufficient statistics and hyperparameters belong to different families");
    switch (stats.index()) {
        case 0: {
            const auto& st = std::get<BernoulliStats>(stats);
            const auto& h = std::get<BetaBernoulliHyper>(hyper);
            const double n = static_cast<double>(st.n);
            const double heads = static_cast<double>(st.heads);
            const double numer = x != 0.0 ? h.a + heads : h.b + n - heads;
            return std::log(numer / (h.a + h.b + n));
        }
        case 1: {
            const auto& st = std::get<MultinomialStats>(stats);
            const auto& h = std::get<DirichletHyper>(hyper);
            const auto symbol = static_cast<std::size_t>(x);
            const double count = symbol < st.counts.size() ? static_cast<double>(st.counts[symbol]) : 0.0;
            return std::log((h.alpha + count) /
                            (h.alpha * static_cast<double>(h.arity) + static_cast<double>(st.n)));
        }
        case 2: {
            const auto& st = std::get<NormalStats>(stats);
            const auto& h = std::get<NormalInverseGammaHyper>(hyper);
            const NormalPosterior post = normal_posterior(st, h);
            // Student-t with nu' dof, location m', scale^2 = s'(r'+1)/(r' nu').
            const double scale_sq = post.s * (post.r + 1.0) / (post.r * post.nu);
            const double d = x - post.m;
            return std::lgamma(0.5 * (post.nu + 1.0)) - std::lgamma(0.5 * post.nu) -
                   0.5 * std::log(post.nu * std::numbers::pi * scale_sq) -
                   0.5 * (post.nu + 1.0) * std::log1p(d * d / (post.nu * scale_sq));
        }
        default: {
            const auto& st = std::get<PoissonStats>(stats);
            const auto& h = std::get<GammaPoissonHyper>(hyper);
            const double shape = h.shape + static_cast<double>(st.sum);
            const double rate = h.rate + static_cast<double>(st.n);
            return std::lgamma(shape + x) - std::lgamma(shape) - std::lgamma(x + 1.0) +
                   shape * std::log(rate / (rate + 1.0)) - x * std::log1p(rate);
        }
    }
}

void incorporate_value(SuffStats& stats, double x) {
    switch (stats.index()) {
        case 0: {
            auto& st = std::get<BernoulliStats>(stats);
            ++st.n;
            if (x != 0.0) ++st.heads;
            break;
        }
        case 1: {
            auto& st = std::get<MultinomialStats>(stats);
            const auto symbol = static_cast<std::size_t>(x);
            if (symbol >= st.counts.size()) st.counts.resize(symbol + 1, 0);
            ++st.counts[symbol];
            ++st.n;
            break;
        }
        case 2: {
            auto& st = std::get<NormalStats>(stats);
            ++st.n;
            st.sum += x;
            st.sum_sq += x * x;
            break;
        }
        default: {
            auto& st = std::get<PoissonStats>(stats);
            const auto k = static_cast<std::uint64_t>(x);
            ++st.n;
            st.sum += k;
            st.sum_log_factorial += log_factorial(k);
            break;
        }
    }
}

void unincorporate_value(SuffStats& stats, double x) {
    if (stats_count(stats) == 0) throw ModelError("cannot unincorporate from empty statistics");
    switch (stats.index()) {
        case 0: {
            auto& st = std::get<BernoulliStats>(stats);
            if (x != 0.0) {
                if (st.heads == 0) throw ModelError("unincorporating a value that was never incorporated");
                --st.heads;
            } else if (st.n == st.heads) {
                throw ModelError("unincorporating a value that was never incorporated");
            }
            --st.n;
            break;
        }
        case 1: {
            auto& st = std::get<MultinomialStats>(stats);
            const auto symbol = static_cast<std::size_t>(x);
            if (symbol >= st.counts.size() || st.counts[symbol] == 0)
                throw ModelError("unincorporating a value that was never incorporated");
            --st.counts[symbol];
            --st.n;
            break;
        }
        case 2: {
            auto& st = std::get<NormalStats>(stats);
            --st.n;
            if (st.n == 0) {
                st.sum = 0.0;
                st.sum_sq = 0.0;
            } else {
                st.sum -= x;
                st.sum_sq -= x * x;
            }
            break;
        }
        default: {
            auto& st = std::get<PoissonStats>(stats);
            const auto k = static_cast<std::uint64_t>(x);
            if (k > st.sum) throw ModelError("unincorporating a value that was never incorporated");
            --st.n;
            st.sum -= k;
            st.sum_log_factorial = st.n == 0 ? 0.0 : st.sum_log_factorial - log_factorial(k);
            break;
        }
    }
}

void check_domain(double x, const Hyperparams& hyper) {
    if (!std::isfinite(x)) throw SchemaError("non-finite value");
    switch (hyper.index()) {
        case 0:
            if (x != 0.0 && x != 1.0) throw SchemaError("binary value must be 0 or 1");
            break;
        case 1: {
            const auto arity = std::get<DirichletHyper>(hyper).arity;
            if (x < 0 || x != std::floor(x) || x >= static_cast<double>(arity))
                throw SchemaError("categorical code out of range");
            break;
        }
        case 2: break;
        default:
            if (x < 0 || x != std::floor(x)) throw SchemaError("count must be a non-negative integer");
            break;
    }
}

std::vector<std::string> hyper_names(const Hyperparams& hyper) {
    switch (hyper.index()) {
        case 0: return {"a", "b"};
        case 1: return {"alpha"};
        case 2: return {"m", "r", "s", "nu"};
        default: return {"shape", "rate"};
    }
}

std::vector<double> hyper_values(const Hyperparams& hyper) {
    switch (hyper.index()) {
        case 0: {
            const auto& h = std::get<BetaBernoulliHyper>(hyper);
            return {h.a, h.b};
        }
        case 1: return {std::get<DirichletHyper>(hyper).alpha};
        case 2: {
            const auto& h = std::get<NormalInverseGammaHyper>(hyper);
            return {h.m, h.r, h.s, h.nu};
        }
        default: {
            const auto& h = std::get<GammaPoissonHyper>(hyper);
            return {h.shape, h.rate};
        }
    }
}

void set_hyper_value(Hyperparams& hyper, std::size_t index, double value) {
    switch (hyper.index()) {
        case 0: {
            auto& h = std::get<BetaBernoulliHyper>(hyper);
            (index == 0 ? h.a : h.b) = value;
            break;
        }
        case 1: std::get<DirichletHyper>(hyper).alpha = value; break;
        case 2: {
            auto& h = std::get<NormalInverseGammaHyper>(hyper);
            double* fields[] = {&h.m, &h.r, &h.s, &h.nu};
            *fields[index] = value;
            break;
        }
        default: {
            auto& h = std::get<GammaPoissonHyper>(hyper);
            (index == 0 ? h.shape : h.rate) = value;
            break;
        }
    }
}

void check_hyperparams(const Hyperparams& hyper) {
    const auto values = hyper_values(hyper);
    // NIG location m is the only unconstrained coordinate.
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (hyper.index() == 2 && i == 0) {
            if (!std::isfinite(values[i])) throw SchemaError("hyperparameter m must be finite");
            continue;
        }
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw SchemaError("hyperparameter " + hyper_names(hyper)[i] + " must be strictly positive");
    }
}

}  // namespace relquery
