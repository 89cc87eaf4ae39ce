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
// Microbenchmarks for the relevance hot paths.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "relquery/crosscat.hpp"
#include "relquery/ensemble.hpp"
#include "relquery/relevance.hpp"
#include "relquery/table.hpp"

namespace {

using namespace relquery;

DataTable gaussian_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ColumnSchema> schema;
    for (std::size_t c = 0; c < cols; ++c) schema.push_back({"x" + std::to_string(c), StatType::numerical(), {}});
    TableBuilder builder(std::move(schema));
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<Cell> row(cols);
        for (auto& cell : row) cell = rng.normal();
        builder.add_row(row);
    }
    return std::move(builder).build();
}

// One block holding every column, rows dealt round-robin into `clusters`.
CrossCatState dealt_state(const DataTable& t, std::size_t clusters) {
    std::vector<std::uint32_t> z(t.num_rows());
    for (RowId r = 0; r < t.num_rows(); ++r) z[r] = static_cast<std::uint32_t>(r % clusters);
    std::vector<Hyperparams> hypers;
    for (std::size_t c = 0; c < t.num_cols(); ++c) hypers.push_back(default_hyperparams(t, c));
    return CrossCatState(t, std::vector<std::size_t>(t.num_cols(), 0), {z}, 1.0, {1.0}, hypers);
}

void BM_IncorporateRecord(benchmark::State& st) {
    const auto t = gaussian_table(640, 10, 1);
    auto s = dealt_state(t, static_cast<std::size_t>(st.range(0)));
    const auto observed = static_cast<std::size_t>(st.range(1));
    std::vector<Observation> rec;
    for (std::size_t c = 0; c < observed; ++c) rec.push_back({c, 0.25 * static_cast<double>(c)});
    Rng rng(2);
    for (auto _ : st) {
        const auto tok = s.incorporate_record(0, rec, rng);
        s.unincorporate_record(tok);
    }
}
BENCHMARK(BM_IncorporateRecord)->ArgsProduct({{10, 20, 40, 80, 160}, {10}})->ArgsProduct({{40}, {1, 5, 10}});

struct RelevanceSetup {
    DataTable table;
    Ensemble ensemble;
};

const RelevanceSetup& relevance_setup() {
    static const RelevanceSetup s = [] {
        RelevanceSetup out{gaussian_table(200, 12, 3), {}};
        out.ensemble = initialize_ensemble(out.table, 32, 4);
        AnalyzeOptions opts;
        opts.iterations = 5;
        analyze(out.ensemble, out.table, opts);
        return out;
    }();
    return s;
}

RelevanceQuery query_of(std::size_t size) {
    RelevanceQuery q;
    for (std::size_t i = 0; i < size; ++i) q.existing.push_back(static_cast<RowId>(7 * i));
    return q;
}

void BM_RelevanceNaive(benchmark::State& st) {
    const auto& s = relevance_setup();
    const auto q = query_of(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(relevance_naive(s.ensemble, q));
}
BENCHMARK(BM_RelevanceNaive)->Arg(1)->Arg(5);

void BM_RelevanceFastWarm(benchmark::State& st) {
    const auto& s = relevance_setup();
    const auto q = query_of(static_cast<std::size_t>(st.range(0)));
    CoOccurrenceCache cache;
    relevance_fast(s.ensemble, cache, q);
    for (auto _ : st) benchmark::DoNotOptimize(relevance_fast(s.ensemble, cache, q));
}
BENCHMARK(BM_RelevanceFastWarm)->Arg(1)->Arg(5);

void BM_BuildCooccurrence(benchmark::State& st) {
    const auto& s = relevance_setup();
    const auto& state = s.ensemble.states.front();
    for (auto _ : st) benchmark::DoNotOptimize(build_cooccurrence(state, state.block_of(0)));
}
BENCHMARK(BM_BuildCooccurrence);

}  // namespace

BENCHMARK_MAIN();
