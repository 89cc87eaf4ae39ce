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

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "relquery/crosscat.hpp"
#include "relquery/rng.hpp"
#include "relquery/table.hpp"

namespace relquery {

/// H independent posterior samples of the CrossCat state over one table.
struct Ensemble {
    std::vector<CrossCatState> states;
    /// Seed each state's stream was derived from.
    std::vector<std::uint64_t> seeds;
    /// Where each state's stream currently stands; analysis continues from here.
    std::vector<Rng::State> rng_states;
    std::uint64_t table_fingerprint = 0;
    std::uint64_t analyze_iterations = 0;

    std::size_t size() const { return states.size(); }
};

/// Draws H states from the prior, each on its own stream derived from `seed`.
Ensemble initialize_ensemble(const DataTable& table, std::size_t num_states, std::uint64_t seed,
                             double alpha0 = 1.0, double alpha1 = 1.0);

/// Per-state seed used by `initialize_ensemble`.
std::uint64_t state_seed(std::uint64_t seed, std::size_t index);

struct AnalyzeOptions {
    std::uint64_t iterations = 0;
    /// Wall-clock budget. The sweep in flight when it expires is completed, so
    /// every state receives the same number of iterations.
    std::optional<double> seconds;
    bool row_moves = true;
    bool column_moves = true;
    bool resample_hypers = true;
    /// Threads used to advance states; results are identical for any value.
    std::size_t workers = 1;
    /// Called after every completed iteration with (done, requested or 0).
    std::function<void(std::uint64_t, std::uint64_t)> progress;
    const std::atomic<bool>* cancel = nullptr;
};

/// Throws ModelError unless `ensemble` was built over `table`.
void check_table(const Ensemble& ensemble, const DataTable& table);

/// Runs (row sweep, column sweep, hyper sweep) iterations on every state and
/// returns the number of iterations completed.
std::uint64_t analyze(Ensemble& ensemble, const DataTable& table, const AnalyzeOptions& options);

}  // namespace relquery
