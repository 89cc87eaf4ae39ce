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
#include "relquery/bql/session.hpp"
#include "relquery/errors.hpp"
#include "relquery/relevance.hpp"

namespace relquery {
namespace {

using testing::binary_table;
using testing::ensemble_of;

CrossCatState one_block(const DataTable& t, std::vector<std::uint32_t> z, double alpha = 1.0) {
    std::vector<Hyperparams> h;
    for (std::size_t c = 0; c < t.num_cols(); ++c) h.push_back(default_hyperparams(t, c));
    return CrossCatState(t, std::vector<std::size_t>(t.num_cols(), 0), {std::move(z)}, 1.0, {alpha}, h);
}

DataTable column_table(std::size_t rows) {
    std::vector<std::vector<Cell>> cells;
    for (std::size_t r = 0; r < rows; ++r) cells.push_back({static_cast<double>(r % 2)});
    return binary_table(cells);
}

TEST(CoOccurrence, SingleCluster) {
    const auto t = column_table(4);
    const auto m = build_cooccurrence(one_block(t, {0, 0, 0, 0}), 0);
    ASSERT_EQ(m.groups.size(), 1u);
    EXPECT_EQ(m.groups[0], (std::vector<RowId>{0, 1, 2, 3}));
}

TEST(CoOccurrence, GroupsExpandToRowEquivalence) {
    const auto t = column_table(3);
    const auto m = build_cooccurrence(one_block(t, {4, 4, 1}), 0);
    EXPECT_EQ(m.groups, (std::vector<std::vector<RowId>>{{0, 1}, {2}}));
    const int expected[3][3] = {{1, 1, 0}, {1, 1, 0}, {0, 0, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(m.row_to_group[i] == m.row_to_group[j], expected[i][j] == 1);
}

TEST(CoOccurrence, MovingOneRowChangesOnlyItsMembership) {
    const auto t = column_table(5);
    const auto a = build_cooccurrence(one_block(t, {0, 0, 1, 1, 2}), 0);
    const auto b = build_cooccurrence(one_block(t, {0, 0, 1, 2, 2}), 0);
    for (RowId i = 0; i < 5; ++i)
        for (RowId j = 0; j < 5; ++j) {
            if (i == 3 || j == 3 || i == j) continue;
            EXPECT_EQ(a.row_to_group[i] == a.row_to_group[j], b.row_to_group[i] == b.row_to_group[j]);
        }
    EXPECT_NE(a.row_to_group[3] == a.row_to_group[2], b.row_to_group[3] == b.row_to_group[2]);
}

TEST(CoOccurrenceCache, BuildsOncePerVersion) {
    const auto t = column_table(4);
    auto s = one_block(t, {0, 0, 1, 1});
    CoOccurrenceCache cache;
    const auto m1 = cache.get(s, 0);
    const auto m2 = cache.get(s, 0);
    EXPECT_EQ(m1, m2);
    EXPECT_EQ(cache.builds(), 1u);
    Rng rng(1);
    gibbs_row_sweep(s, t, rng);
    cache.get(s, 0);
    EXPECT_EQ(cache.builds(), 2u);
    cache.clear();
    cache.get(s, 0);
    EXPECT_EQ(cache.builds(), 3u);
}

// Three states over the seven countries of the worked example, with the
// query row co-clustered with the United States in each.
TEST(Relevance, WorkedExampleAverages) {
    const auto t = column_table(6);  // Australia, Lebanon, United States, China, Greece, Peru
    const std::vector<std::uint32_t> s1 = {0, 1, 0, 2, 0, 0};
    const std::vector<std::uint32_t> s2 = {1, 2, 0, 0, 3, 4};
    const std::vector<std::uint32_t> s3 = {0, 1, 0, 2, 0, 3};
    const auto e = ensemble_of(t, {one_block(t, s1), one_block(t, s2), one_block(t, s3)});
    const auto r = relevance_naive(e, {.existing = {2}, .context = 0});
    const std::vector<std::string> rendered = {"0.66", "0.00", "1.00", "0.33", "0.66", "0.33"};
    for (RowId row = 0; row < 6; ++row) EXPECT_EQ(bql::format_probability(r.probability(row)), rendered[row]);
    EXPECT_EQ(r.hits, (std::vector<std::uint32_t>{2, 0, 3, 1, 2, 1}));
}

TEST(Relevance, RenderedIndicatorAverages) {
    EXPECT_EQ(bql::format_probability(1.0 / 3.0), "0.33");
    EXPECT_EQ(bql::format_probability(1.0), "1.00");
    EXPECT_EQ(bql::format_probability(2.0 / 3.0), "0.66");
    EXPECT_EQ(bql::format_probability(0.0), "0.00");
}

TEST(Relevance, SingletonQueryIsCertain) {
    const auto f = testing::planted_fixture(40, 2, 3, 1);
    const auto e = testing::random_ensemble(f.table, 6, 2, 2);
    CoOccurrenceCache cache;
    for (RowId q : {0u, 17u, 39u}) {
        const auto r = relevance_fast(e, cache, {.existing = {q}, .context = 1});
        EXPECT_EQ(r.probability(q), 1.0);
    }
}

TEST(Relevance, SingleStateIsIndicatorOfQueryCluster) {
    const auto t = column_table(6);
    const auto e = ensemble_of(t, {one_block(t, {0, 0, 1, 1, 0, 1})});
    const auto together = relevance_naive(e, {.existing = {0, 4}, .context = 0});
    EXPECT_EQ(together.hits, (std::vector<std::uint32_t>{1, 1, 0, 0, 1, 0}));
    const auto apart = relevance_naive(e, {.existing = {0, 2}, .context = 0});
    EXPECT_EQ(apart.hits, (std::vector<std::uint32_t>(6, 0)));
}

TEST(Relevance, HandMultipliedCounts) {
    const auto t = column_table(4);
    const auto e = ensemble_of(t, {one_block(t, {0, 0, 0, 1})});
    CoOccurrenceCache cache;
    const auto r = relevance_fast(e, cache, {.existing = {0, 1}, .context = 0});
    EXPECT_EQ(r.hits, (std::vector<std::uint32_t>{1, 1, 1, 0}));
}

TEST(Relevance, ContextSelectsTheBlock) {
    const auto t = binary_table({{1.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {0.0, 1.0}});
    const std::vector<Hyperparams> h = {BetaBernoulliHyper{}, BetaBernoulliHyper{}};
    const CrossCatState s(t, {0, 1}, {{0, 0, 1, 1}, {0, 1, 0, 1}}, 1.0, {1.0, 1.0}, h);
    const auto e = ensemble_of(t, {s});
    EXPECT_EQ(relevance_naive(e, {.existing = {0}, .context = 0}).hits, (std::vector<std::uint32_t>{1, 1, 0, 0}));
    EXPECT_EQ(relevance_naive(e, {.existing = {0}, .context = 1}).hits, (std::vector<std::uint32_t>{1, 0, 1, 0}));
}

TEST(RelevanceProperty, FastEqualsNaive) {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const auto f = testing::planted_fixture(10 + rng.uniform_index(60), 2, 3, 100 + trial);
        const auto e = testing::random_ensemble(f.table, 1 + rng.uniform_index(8), trial, rng.uniform_index(3));
        RelevanceQuery q;
        q.context = rng.uniform_index(f.table.num_cols());
        const auto nq = 1 + rng.uniform_index(4);
        for (std::uint64_t i = 0; i < nq; ++i) q.existing.push_back(rng.uniform_index(f.table.num_rows()));
        CoOccurrenceCache cache;
        const auto fast = relevance_fast(e, cache, q);
        const auto naive = relevance_naive(e, q);
        ASSERT_EQ(fast.hits, naive.hits);
        EXPECT_EQ(relevance_query(e, cache, q).hits, naive.hits);
    }
}

TEST(RelevanceProperty, AddingQueryRowsNeverRaisesRelevance) {
    const auto f = testing::planted_fixture(50, 2, 3, 4);
    const auto e = testing::random_ensemble(f.table, 8, 5, 3);
    CoOccurrenceCache cache;
    const auto one = relevance_fast(e, cache, {.existing = {3}, .context = 0});
    const auto two = relevance_fast(e, cache, {.existing = {3, 11}, .context = 0});
    for (RowId r = 0; r < 50; ++r) EXPECT_LE(two.hits[r], one.hits[r]);
}

TEST(Incorporate, EmptyRecordFollowsCrp) {
    const auto t = column_table(5);
    auto s = one_block(t, {0, 0, 0, 1, 1}, 1.5);
    std::vector<std::uint32_t> slots;
    const auto lw = s.record_log_weights(0, {}, slots);
    const std::vector<std::size_t> sizes = {3, 2};
    const auto expected = crp_weights(sizes, 1.5);
    double norm = 0;
    for (double w : lw) norm += std::exp(w);
    ASSERT_EQ(lw.size(), expected.size());
    for (std::size_t i = 0; i < lw.size(); ++i) EXPECT_NEAR(std::exp(lw[i]) / norm, expected[i], 1e-12);
}

TEST(Incorporate, JoinProbabilityFourSevenths) {
    const auto t = binary_table({{1.0}});
    auto s = one_block(t, {0});
    const std::vector<Observation> record = {{0, 1.0}};
    std::vector<std::uint32_t> slots;
    const auto lw = s.record_log_weights(0, record, slots);
    ASSERT_EQ(lw.size(), 2u);
    const double join = std::exp(lw[0]) / (std::exp(lw[0]) + std::exp(lw[1]));
    EXPECT_NEAR(join, 4.0 / 7.0, 1e-12);

    Rng rng(6);
    int joined = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto tok = s.incorporate_record(0, record, rng);
        joined += s.cluster_of(0, 1) == s.cluster_of(0, 0);
        s.unincorporate_record(tok);
    }
    EXPECT_NEAR(joined / double(n), 4.0 / 7.0, 0.015);
}

TEST(Incorporate, RoundTripRestoresFingerprint) {
    const auto f = testing::planted_fixture(30, 2, 3, 7);
    Rng rng(8);
    auto s = testing::random_state(f.table, rng);
    const auto fp = s.fingerprint();
    const auto version = s.version();
    const std::vector<Observation> rec = {{0, 1.5}, {1, -2.0}};
    const auto tok = incorporate_record(s, 0, rec, rng);
    EXPECT_EQ(s.pending_records(), 1u);
    EXPECT_NE(s.fingerprint(), fp);
    unincorporate_record(s, tok);
    EXPECT_EQ(s.fingerprint(), fp);
    EXPECT_EQ(s.version(), version);
    EXPECT_NO_THROW(s.validate(f.table));
}

TEST(Incorporate, LifoUnwindOfThreeRecords) {
    const auto f = testing::planted_fixture(30, 2, 3, 9);
    Rng rng(10);
    auto s = testing::random_state(f.table, rng);
    const auto fp = s.fingerprint();
    std::vector<RecordToken> toks;
    for (int i = 0; i < 3; ++i) {
        const std::vector<Observation> rec = {{static_cast<std::size_t>(i), rng.normal()}};
        toks.push_back(incorporate_record(s, i, rec, rng));
    }
    EXPECT_THROW(unincorporate_record(s, toks[0]), ModelError);
    for (auto it = toks.rbegin(); it != toks.rend(); ++it) unincorporate_record(s, *it);
    EXPECT_EQ(s.fingerprint(), fp);
}

TEST(Incorporate, ForeignTokenRejected) {
    const auto t = column_table(4);
    auto a = one_block(t, {0, 0, 1, 1});
    auto b = a;
    Rng rng(11);
    const auto tok = a.incorporate_record(0, {}, rng);
    EXPECT_THROW(b.unincorporate_record(tok), ModelError);
}

TEST(Incorporate, CacheValidAfterRoundTrip) {
    const auto f = testing::planted_fixture(30, 2, 3, 12);
    auto e = testing::random_ensemble(f.table, 4, 13, 2);
    CoOccurrenceCache cache;
    const RelevanceQuery q{.existing = {1, 2}, .context = 0};
    const auto before = relevance_fast(e, cache, q);
    Rng rng(14);
    const std::vector<Observation> rec = {{0, 0.5}};
    const auto tok = incorporate_record(e.states[0], 0, rec, rng);
    unincorporate_record(e.states[0], tok);
    EXPECT_EQ(relevance_fast(e, cache, q).hits, before.hits);
}

TEST(HypotheticalQuery, RepeatableAndNonMutating) {
    const auto f = testing::planted_fixture(40, 2, 3, 15);
    const auto e = testing::random_ensemble(f.table, 8, 16, 5);
    std::vector<std::uint64_t> fps;
    for (const auto& s : e.states) fps.push_back(s.fingerprint());
    CoOccurrenceCache cache;
    RelevanceQuery q;
    q.hypothetical = {{{0, f.table.value(0, 0)}, {2, f.table.value(0, 2)}}};
    q.context = 0;
    const auto a = relevance_query(e, cache, q);
    const auto b = relevance_query(e, cache, q);
    EXPECT_EQ(a.hits, b.hits);
    EXPECT_EQ(a.num_states, 8u);
    for (std::size_t h = 0; h < e.size(); ++h) EXPECT_EQ(e.states[h].fingerprint(), fps[h]);
}

TEST(HypotheticalQuery, IgnoredColumnsReported) {
    const auto f = testing::planted_fixture(30, 2, 2, 17);
    const auto e = testing::random_ensemble(f.table, 6, 18, 10);
    CoOccurrenceCache cache;
    RelevanceQuery q;
    q.hypothetical = {{{0, 1.0}, {1, 1.0}}};
    q.context = 0;
    const auto r = relevance_query(e, cache, q);
    std::size_t apart = 0;
    for (const auto& s : e.states) apart += s.block_of(0) != s.block_of(1);
    if (apart == 0) {
        EXPECT_TRUE(r.ignored_columns.empty());
    } else {
        ASSERT_EQ(r.ignored_columns.size(), 1u);
        EXPECT_EQ(r.ignored_columns[0], (std::pair<std::size_t, std::size_t>{1, apart}));
    }
}

TEST(HypotheticalQuery, DuplicateOfARowRanksItsClusterFirst) {
    // Two well separated clusters; a copy of row 0 must rank row 0 at least
    // as high as every row of the other cluster.
    std::vector<std::vector<Cell>> cells;
    for (int r = 0; r < 30; ++r) cells.push_back({r < 15 ? 0.0 + 0.01 * r : 50.0 + 0.01 * r});
    const auto t = testing::make_table({{"x", StatType::numerical(), {}}}, cells);
    const auto e = testing::random_ensemble(t, 32, 19, 30);
    CoOccurrenceCache cache;
    const auto r = relevance_query(e, cache, {.hypothetical = {{{0, t.value(0, 0)}}}, .context = 0});
    for (RowId row = 15; row < 30; ++row) EXPECT_GE(r.hits[0], r.hits[row]);
    EXPECT_GT(r.probability(0), 0.9);
}

TEST(HypotheticalQuery, SequentialRecordsCoCluster) {
    const auto f = testing::planted_fixture(30, 2, 3, 20);
    const auto e = testing::random_ensemble(f.table, 8, 21, 10);
    CoOccurrenceCache cache;
    RelevanceQuery q;
    q.context = 0;
    q.hypothetical = {{{0, f.table.value(3, 0)}}, {{0, f.table.value(4, 0)}}, {{0, f.table.value(5, 0)}}};
    const auto r = relevance_query(e, cache, q);
    EXPECT_EQ(r.hits.size(), 30u);
    for (auto h : r.hits) EXPECT_LE(h, 8u);
}

TEST(Dependence, ExamplesAndSymmetry) {
    const auto t = binary_table({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<Hyperparams> h = {BetaBernoulliHyper{}, BetaBernoulliHyper{}};
    const CrossCatState joined(t, {0, 0}, {{0, 0}}, 1.0, {1.0}, h);
    const CrossCatState split(t, {0, 1}, {{0, 0}, {0, 0}}, 1.0, {1.0, 1.0}, h);
    const auto e = ensemble_of(t, {joined, joined, split, joined});
    EXPECT_EQ(dependence_probability(e, 0, 0), 1.0);
    EXPECT_EQ(dependence_probability(e, 0, 1), 0.75);
    const auto m = pairwise_dependence(e);
    EXPECT_EQ(m[0][1], m[1][0]);
    EXPECT_EQ(m[1][1], 1.0);
}

TEST(Relevance, RejectsBadQueries) {
    const auto t = column_table(4);
    const auto e = ensemble_of(t, {one_block(t, {0, 0, 1, 1})});
    CoOccurrenceCache cache;
    EXPECT_THROW(relevance_query(e, cache, {.existing = {9}, .context = 0}), ModelError);
    EXPECT_THROW(relevance_query(e, cache, {.existing = {0}, .context = 3}), ModelError);
    EXPECT_THROW(relevance_query(e, cache, {.context = 0}), ModelError);
}

}  // namespace
}  // namespace relquery
