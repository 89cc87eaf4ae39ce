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
#include "relquery/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "relquery/errors.hpp"

namespace relquery {

std::uint64_t state_seed(std::uint64_t seed, std::size_t index) {
    return mix64(mix64(seed) + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1));
}

Ensemble initialize_ensemble(const DataTable& table, std::size_t num_states, std::uint64_t seed, double alpha0,
                             double alpha1) {
    if (num_states == 0) throw ModelError("an ensemble needs at least one model");
    Ensemble ensemble;
    ensemble.table_fingerprint = table.fingerprint();
    ensemble.states.reserve(num_states);
    for (std::size_t h = 0; h < num_states; ++h) {
        const std::uint64_t s = state_seed(seed, h);
        Rng rng(s);
        ensemble.states.push_back(prior_sample(table, alpha0, alpha1, rng));
        ensemble.seeds.push_back(s);
        ensemble.rng_states.push_back(rng.state());
    }
    return ensemble;
}

void check_table(const Ensemble& ensemble, const DataTable& table) {
    if (ensemble.table_fingerprint != table.fingerprint())
        throw ModelError("ensemble was built over a different table (fingerprint mismatch)");
    for (const auto& state : ensemble.states) {
        if (state.num_rows() != table.num_rows() || state.num_cols() != table.num_cols())
            throw ModelError("ensemble state shape differs from table");
    }
}

namespace {

void step(CrossCatState& state, Rng& rng, const DataTable& table, const AnalyzeOptions& options) {
    if (options.row_moves) gibbs_row_sweep(state, table, rng);
    if (options.column_moves) gibbs_column_sweep(state, table, rng);
    if (options.resample_hypers) hyper_grid_gibbs(state, table, rng);
}

}  // namespace

std::uint64_t analyze(Ensemble& ensemble, const DataTable& table, const AnalyzeOptions& options) {
    check_table(ensemble, table);
    if (!options.seconds && options.iterations == 0) return 0;
    if (options.seconds && !(*options.seconds >= 0)) throw ModelError("time budget must be non-negative");

    const std::size_t num_states = ensemble.size();
    std::vector<Rng> rngs;
    rngs.reserve(num_states);
    for (const auto& st : ensemble.rng_states) rngs.emplace_back(st);

    const auto start = std::chrono::steady_clock::now();
    auto out_of_time = [&] {
        if (!options.seconds) return false;
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        return elapsed.count() >= *options.seconds;
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(num_states, 1));

    std::uint64_t done = 0;
    while (options.iterations == 0 || done < options.iterations) {
        if (done > 0 && out_of_time()) break;
        if (options.cancel && options.cancel->load()) break;
        if (workers == 1) {
            for (std::size_t h = 0; h < num_states; ++h) step(ensemble.states[h], rngs[h], table, options);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t h = w; h < num_states; h += workers)
                            step(ensemble.states[h], rngs[h], table, options);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }
        ++done;
        for (std::size_t h = 0; h < num_states; ++h) ensemble.rng_states[h] = rngs[h].state();
        ensemble.analyze_iterations += 1;
        if (options.progress) options.progress(done, options.iterations);
        if (options.seconds && out_of_time()) break;
    }
    return done;
}

}  // namespace relquery
