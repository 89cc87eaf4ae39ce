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

#include <atomic>
#include <set>

#include "fixtures.hpp"
#include "relquery/ensemble.hpp"
#include "relquery/errors.hpp"

namespace relquery {
namespace {

std::vector<std::uint64_t> fingerprints(const Ensemble& e) {
    std::vector<std::uint64_t> out;
    for (const auto& s : e.states) out.push_back(s.fingerprint());
    return out;
}

TEST(Ensemble, ZeroIterationsIsANoOp) {
    const auto f = testing::planted_fixture(30, 2, 2, 1);
    auto e = initialize_ensemble(f.table, 4, 9);
    const auto before = fingerprints(e);
    EXPECT_EQ(analyze(e, f.table, {}), 0u);
    EXPECT_EQ(fingerprints(e), before);
}

TEST(Ensemble, StatesAreDistinct) {
    const auto f = testing::planted_fixture(30, 2, 2, 2);
    auto e = initialize_ensemble(f.table, 8, 3);
    AnalyzeOptions opts;
    opts.iterations = 2;
    analyze(e, f.table, opts);
    const auto fps = fingerprints(e);
    EXPECT_EQ(std::set<std::uint64_t>(fps.begin(), fps.end()).size(), 8u);
    EXPECT_EQ(std::set<std::uint64_t>(e.seeds.begin(), e.seeds.end()).size(), 8u);
}

TEST(Ensemble, SameSeedSameEnsemble) {
    const auto f = testing::planted_fixture(30, 2, 2, 3);
    EXPECT_EQ(fingerprints(testing::random_ensemble(f.table, 3, 5, 4)),
              fingerprints(testing::random_ensemble(f.table, 3, 5, 4)));
    EXPECT_NE(fingerprints(testing::random_ensemble(f.table, 3, 5, 4)),
              fingerprints(testing::random_ensemble(f.table, 3, 6, 4)));
}

TEST(Ensemble, ChainedAnalysisContinuesTheStream) {
    const auto f = testing::planted_fixture(30, 2, 2, 4);
    auto a = initialize_ensemble(f.table, 3, 7);
    auto b = initialize_ensemble(f.table, 3, 7);
    AnalyzeOptions two, three, five;
    two.iterations = 2;
    three.iterations = 3;
    five.iterations = 5;
    analyze(a, f.table, two);
    analyze(a, f.table, three);
    analyze(b, f.table, five);
    EXPECT_EQ(fingerprints(a), fingerprints(b));
    EXPECT_EQ(a.rng_states, b.rng_states);
    EXPECT_EQ(a.analyze_iterations, 5u);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
    const auto f = testing::planted_fixture(30, 2, 2, 5);
    auto a = initialize_ensemble(f.table, 5, 8);
    auto b = initialize_ensemble(f.table, 5, 8);
    AnalyzeOptions opts;
    opts.iterations = 3;
    analyze(a, f.table, opts);
    opts.workers = 3;
    analyze(b, f.table, opts);
    EXPECT_EQ(fingerprints(a), fingerprints(b));
}

TEST(Ensemble, ProgressAndCancel) {
    const auto f = testing::planted_fixture(30, 2, 2, 6);
    auto e = initialize_ensemble(f.table, 2, 9);
    std::atomic<bool> cancel{false};
    std::vector<std::uint64_t> seen;
    AnalyzeOptions opts;
    opts.iterations = 50;
    opts.cancel = &cancel;
    opts.progress = [&](std::uint64_t done, std::uint64_t requested) {
        seen.push_back(done);
        EXPECT_EQ(requested, 50u);
        if (done == 3) cancel = true;
    };
    EXPECT_EQ(analyze(e, f.table, opts), 3u);
    EXPECT_EQ(seen, (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(e.analyze_iterations, 3u);
}

TEST(Ensemble, TimeBudgetRunsWholeIterations) {
    const auto f = testing::planted_fixture(30, 2, 2, 7);
    auto e = initialize_ensemble(f.table, 2, 10);
    AnalyzeOptions opts;
    opts.seconds = 0.05;
    const auto done = analyze(e, f.table, opts);
    EXPECT_GE(done, 1u);
    EXPECT_EQ(e.analyze_iterations, done);
}

TEST(Ensemble, RejectsForeignTable) {
    const auto f = testing::planted_fixture(30, 2, 2, 8);
    const auto g = testing::planted_fixture(30, 2, 2, 9);
    auto e = initialize_ensemble(f.table, 2, 1);
    EXPECT_THROW(check_table(e, g.table), ModelError);
    AnalyzeOptions opts;
    opts.iterations = 1;
    EXPECT_THROW(analyze(e, g.table, opts), ModelError);
}

}  // namespace
}  // namespace relquery
