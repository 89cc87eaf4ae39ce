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
#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "relquery/components.hpp"
#include "relquery/errors.hpp"

namespace relquery {
namespace {

SuffStats stats_of(const Hyperparams& h, const std::vector<double>& xs) {
    auto s = empty_stats(h);
    for (double x : xs) incorporate_value(s, x);
    return s;
}

TEST(BetaBernoulli, TwoHeadsUnderUniformPrior) {
    const Hyperparams h = BetaBernoulliHyper{1, 1};
    EXPECT_NEAR(log_marginal(stats_of(h, {1, 1}), h), std::log(1.0 / 3.0), 1e-12);
    EXPECT_NEAR(std::exp(log_marginal(stats_of(h, {1, 1}), h)), testing::quadrature_bb_marginal(2, 2, 1, 1), 1e-8);
}

TEST(BetaBernoulli, Predictives) {
    const Hyperparams h = BetaBernoulliHyper{1, 1};
    EXPECT_NEAR(log_predictive(1, stats_of(h, {1}), h), std::log(2.0 / 3.0), 1e-12);
    EXPECT_NEAR(log_predictive(1, empty_stats(h), h), std::log(0.5), 1e-12);
}

TEST(BetaBernoulli, MatchesClosedFormAndQuadrature) {
    for (auto [a, b] : {std::pair{0.5, 2.0}, {3.0, 1.5}}) {
        const Hyperparams h = BetaBernoulliHyper{a, b};
        const auto st = stats_of(h, {1, 0, 1, 1, 0, 1});
        EXPECT_NEAR(log_marginal(st, h), testing::oracle_bb_log_marginal(4, 6, a, b), 1e-12);
        EXPECT_NEAR(std::exp(log_marginal(st, h)), testing::quadrature_bb_marginal(4, 6, a, b), 1e-6);
    }
}

TEST(Dirichlet, SymmetricPredictive) {
    const Hyperparams h = DirichletHyper{1.0, 3};
    for (double x : {0.0, 1.0, 2.0}) EXPECT_NEAR(log_predictive(x, empty_stats(h), h), std::log(1.0 / 3.0), 1e-12);
    const auto st = stats_of(h, {0, 2, 2, 1, 2});
    EXPECT_NEAR(log_marginal(st, h), testing::oracle_dm_log_marginal({1, 1, 3}, 1.0), 1e-12);
}

TEST(NormalInverseGamma, SingletonIsStudentT) {
    const NormalInverseGammaHyper nig{0.5, 2.0, 3.0, 4.0};
    const Hyperparams h = nig;
    for (double x : {-2.0, 0.0, 0.7, 5.0}) {
        const double got = log_marginal(stats_of(h, {x}), h);
        EXPECT_NEAR(got, testing::oracle_nig_log_predictive_prior(x, nig.m, nig.r, nig.s, nig.nu), 1e-10);
    }
}

TEST(NormalInverseGamma, MatchesGridIntegration) {
    const NormalInverseGammaHyper nig{0.0, 1.0, 1.0, 1.0};
    const Hyperparams h = nig;
    const std::vector<double> xs = {0.3, -1.2, 0.8};
    EXPECT_NEAR(log_marginal(stats_of(h, xs), h), testing::quadrature_nig_log_marginal(xs, 0, 1, 1, 1), 1e-3);
}

TEST(GammaPoisson, MatchesQuadrature) {
    const GammaPoissonHyper gp{2.0, 0.5};
    const Hyperparams h = gp;
    const std::vector<std::uint64_t> xs = {3, 0, 5, 2};
    const auto st = stats_of(h, {3, 0, 5, 2});
    EXPECT_NEAR(log_marginal(st, h), testing::quadrature_gp_log_marginal(xs, 2.0, 0.5), 1e-6);
}

TEST(Components, EmptyStatsHaveZeroMarginal) {
    for (const Hyperparams& h : {Hyperparams{BetaBernoulliHyper{}}, Hyperparams{DirichletHyper{0.5, 4}},
                                 Hyperparams{NormalInverseGammaHyper{}}, Hyperparams{GammaPoissonHyper{}}})
        EXPECT_EQ(log_marginal(empty_stats(h), h), 0.0);
}

TEST(Components, IncorporateRoundTrip) {
    const Hyperparams h = NormalInverseGammaHyper{};
    auto st = empty_stats(h);
    incorporate_value(st, 1.0);
    unincorporate_value(st, 1.0);
    EXPECT_EQ(st, empty_stats(h));
    EXPECT_THROW(unincorporate_value(st, 1.0), ModelError);

    const Hyperparams b = BetaBernoulliHyper{};
    const auto two = stats_of(b, {1, 1});
    EXPECT_EQ(std::get<BernoulliStats>(two), (BernoulliStats{2, 2}));
    EXPECT_EQ(stats_of(h, {2.0, 4.0}), stats_of(h, {4.0, 2.0}));
}

TEST(Components, DomainChecks) {
    EXPECT_THROW(check_domain(2.0, BetaBernoulliHyper{}), SchemaError);
    EXPECT_THROW(check_domain(3.0, DirichletHyper{1.0, 3}), SchemaError);
    EXPECT_THROW(check_domain(1.5, GammaPoissonHyper{}), SchemaError);
    EXPECT_NO_THROW(check_domain(-7.25, NormalInverseGammaHyper{}));
    EXPECT_THROW(check_hyperparams(NormalInverseGammaHyper{0, -1, 1, 1}), SchemaError);
    EXPECT_THROW(log_marginal(BernoulliStats{}, GammaPoissonHyper{}), ModelError);
}

TEST(Components, HyperCoordinatesRoundTrip) {
    Hyperparams h = NormalInverseGammaHyper{1, 2, 3, 4};
    EXPECT_EQ(hyper_names(h).size(), hyper_values(h).size());
    set_hyper_value(h, 2, 9.0);
    EXPECT_EQ(std::get<NormalInverseGammaHyper>(h).s, 9.0);
}

// Discrete predictives sum to one, with or without prior data.
TEST(ComponentsProperty, DiscretePredictivesNormalize) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t arity = 2 + rng.uniform_index(5);
        const Hyperparams dm = DirichletHyper{0.1 + 3 * rng.uniform(), arity};
        const Hyperparams bb = BetaBernoulliHyper{0.1 + 3 * rng.uniform(), 0.1 + 3 * rng.uniform()};
        auto sdm = empty_stats(dm), sbb = empty_stats(bb);
        const auto n = rng.uniform_index(20);
        for (std::uint64_t i = 0; i < n; ++i) {
            incorporate_value(sdm, static_cast<double>(rng.uniform_index(arity)));
            incorporate_value(sbb, static_cast<double>(rng.uniform_index(2)));
        }
        double total = 0;
        for (std::size_t x = 0; x < arity; ++x) total += std::exp(log_predictive(static_cast<double>(x), sdm, dm));
        EXPECT_NEAR(total, 1.0, 1e-10);
        EXPECT_NEAR(std::exp(log_predictive(0, sbb, bb)) + std::exp(log_predictive(1, sbb, bb)), 1.0, 1e-10);
    }
}

TEST(ComponentsProperty, CountPredictiveNormalizes) {
    const Hyperparams gp = GammaPoissonHyper{1.5, 0.7};
    const auto st = stats_of(gp, {2, 4, 1});
    double total = 0;
    for (int x = 0; x < 400; ++x) total += std::exp(log_predictive(x, st, gp));
    EXPECT_NEAR(total, 1.0, 1e-10);
}

// log M(x_1..x_n) = sum_i log p(x_i | x_1..x_{i-1}), in any order.
TEST(ComponentsProperty, ChainRuleAndExchangeability) {
    Rng rng(99);
    for (int family = 0; family < 4; ++family) {
        for (int trial = 0; trial < 1000; ++trial) {
            Hyperparams h;
            std::vector<double> xs(1 + rng.uniform_index(12));
            switch (family) {
                case 0:
                    h = BetaBernoulliHyper{0.2 + 2 * rng.uniform(), 0.2 + 2 * rng.uniform()};
                    for (auto& x : xs) x = static_cast<double>(rng.uniform_index(2));
                    break;
                case 1: {
                    const std::size_t k = 2 + rng.uniform_index(4);
                    h = DirichletHyper{0.2 + 2 * rng.uniform(), k};
                    for (auto& x : xs) x = static_cast<double>(rng.uniform_index(k));
                    break;
                }
                case 2:
                    h = NormalInverseGammaHyper{rng.normal(), 0.2 + 2 * rng.uniform(), 0.2 + 2 * rng.uniform(),
                                                0.5 + 3 * rng.uniform()};
                    for (auto& x : xs) x = 3 * rng.normal();
                    break;
                default:
                    h = GammaPoissonHyper{0.3 + 3 * rng.uniform(), 0.1 + rng.uniform()};
                    for (auto& x : xs) x = static_cast<double>(rng.uniform_index(15));
            }
            auto st = empty_stats(h);
            double chain = 0;
            for (double x : xs) {
                chain += log_predictive(x, st, h);
                incorporate_value(st, x);
            }
            const double joint = log_marginal(st, h);
            ASSERT_NEAR(chain, joint, 1e-8 * std::max(1.0, std::abs(joint))) << "family " << family;
            std::vector<double> rev(xs.rbegin(), xs.rend());
            ASSERT_NEAR(log_marginal(stats_of(h, rev), h), joint, 1e-8 * std::max(1.0, std::abs(joint)));
        }
    }
}

TEST(DefaultHyperparams, FamiliesFollowStatType) {
    const auto t = testing::make_table({{"b", StatType::binary(), Codebook({"0", "1"})},
                                        {"c", StatType::categorical(4), Codebook({"a", "b", "c", "d"})},
                                        {"x", StatType::numerical(), {}},
                                        {"n", StatType::count(), {}}},
                                       {{0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 4.0, 5.0}});
    EXPECT_TRUE(std::holds_alternative<BetaBernoulliHyper>(default_hyperparams(t, 0)));
    ASSERT_TRUE(std::holds_alternative<DirichletHyper>(default_hyperparams(t, 1)));
    EXPECT_EQ(std::get<DirichletHyper>(default_hyperparams(t, 1)).arity, 4u);
    EXPECT_TRUE(std::holds_alternative<NormalInverseGammaHyper>(default_hyperparams(t, 2)));
    EXPECT_TRUE(std::holds_alternative<GammaPoissonHyper>(default_hyperparams(t, 3)));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NO_THROW(check_hyperparams(default_hyperparams(t, c)));
}

}  // namespace
}  // namespace relquery
