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
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "relquery/crosscat.hpp"
#include "relquery/ensemble.hpp"

namespace relquery {

/// Row-equivalence structure of one block stored as a list of lists:
/// `groups[g]` holds the rows of one cluster, ascending. The implied dense
/// matrix has S[i][j] = 1 iff row_to_group[i] == row_to_group[j].
struct CoOccurrenceMatrix {
    std::size_t block = 0;
    std::vector<std::vector<RowId>> groups;
    std::vector<std::uint32_t> row_to_group;
    /// Group of each cluster slot at build time; kNoGroup for free slots.
    std::vector<std::uint32_t> slot_to_group;

    /// `CrossCatState::fingerprint` of the state at build time.
    std::uint64_t state_fingerprint = 0;

    static constexpr std::uint32_t kNoGroup = 0xFFFFFFFFu;

    bool operator==(const CoOccurrenceMatrix&) const = default;
};

/// One pass over the block's assignments; groups are numbered by first row.
CoOccurrenceMatrix build_cooccurrence(const CrossCatState& state, std::size_t block);

/// Lazily built matrices keyed by (state uid, block), revalidated against the
/// state's version. Safe for concurrent use.
class CoOccurrenceCache {
public:
    std::shared_ptr<const CoOccurrenceMatrix> get(const CrossCatState& state, std::size_t block);
    std::size_t builds() const;
    void clear();

private:
    struct Entry {
        std::uint64_t version = 0;
        std::shared_ptr<const CoOccurrenceMatrix> matrix;
    };
    mutable std::mutex mutex_;
    std::map<std::pair<std::uint64_t, std::size_t>, Entry> entries_;
    std::size_t builds_ = 0;
};

/// Query rows: existing rowids plus hypothetical partial records, and the
/// context column whose block decides co-clustering.
struct RelevanceQuery {
    std::vector<RowId> existing;
    std::vector<std::vector<Observation>> hypothetical;
    std::size_t context = 0;
};

struct RelevanceResult {
    /// Number of states in which each original row co-clusters with the query.
    std::vector<std::uint32_t> hits;
    std::size_t num_states = 0;
    /// Hypothetical columns outside the context block: (column, states where ignored).
    std::vector<std::pair<std::size_t, std::size_t>> ignored_columns;

    double probability(RowId row) const {
        return static_cast<double>(hits.at(row)) / static_cast<double>(num_states);
    }
    std::vector<double> probabilities() const;
};

/// Per-state indicator of co-clustering with every query row, by direct
/// comparison of cluster assignments. Existing rows only.
std::vector<std::uint8_t> relevance_indicators(const CrossCatState& state, const RelevanceQuery& query);

/// Averages `relevance_indicators` over the ensemble.
RelevanceResult relevance_naive(const Ensemble& ensemble, const RelevanceQuery& query);

/// Same result as `relevance_naive`, using cached co-occurrence matrices and
/// integer co-membership counts compared against |Q|. Existing rows only.
RelevanceResult relevance_fast(const Ensemble& ensemble, CoOccurrenceCache& cache, const RelevanceQuery& query);

/// Incorporates a partial record into the block of `context`.
RecordToken incorporate_record(CrossCatState& state, std::size_t context, std::span<const Observation> record,
                               Rng& rng);
void unincorporate_record(CrossCatState& state, const RecordToken& token);

/// Full query: hypothetical records are incorporated into a private copy of
/// each state, relevance of rows 0..N-1 is computed, and the copy is dropped.
/// The ensemble is never mutated. Sampling is seeded from the state seed,
/// state version and query content, so repeated queries agree.
RelevanceResult relevance_query(const Ensemble& ensemble, CoOccurrenceCache& cache, const RelevanceQuery& query);

/// Fraction of states in which c1 and c2 share a block.
double dependence_probability(const Ensemble& ensemble, std::size_t c1, std::size_t c2);

/// p x p matrix of dependence probabilities.
std::vector<std::vector<double>> pairwise_dependence(const Ensemble& ensemble);

}  // namespace relquery
