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
#include "relquery/relevance.hpp"

#include <algorithm>
#include <cstring>

#include "relquery/errors.hpp"

namespace relquery {

CoOccurrenceMatrix build_cooccurrence(const CrossCatState& state, std::size_t block) {
    if (block >= state.num_blocks()) throw ModelError("unknown block " + std::to_string(block));
    const Block& b = state.block(block);
    CoOccurrenceMatrix out;
    out.block = block;
    out.state_fingerprint = state.fingerprint();
    out.slot_to_group.assign(b.clusters.size(), CoOccurrenceMatrix::kNoGroup);
    out.row_to_group.resize(b.assignments.size());
    for (RowId r = 0; r < b.assignments.size(); ++r) {
        std::uint32_t& g = out.slot_to_group[b.assignments[r]];
        if (g == CoOccurrenceMatrix::kNoGroup) {
            g = static_cast<std::uint32_t>(out.groups.size());
            out.groups.emplace_back();
        }
        out.groups[g].push_back(r);
        out.row_to_group[r] = g;
    }
    return out;
}

std::shared_ptr<const CoOccurrenceMatrix> CoOccurrenceCache::get(const CrossCatState& state, std::size_t block) {
    const auto key = std::make_pair(state.uid(), block);
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(key);
        if (it != entries_.end() && it->second.version == state.version()) return it->second.matrix;
    }
    auto matrix = std::make_shared<const CoOccurrenceMatrix>(build_cooccurrence(state, block));
    std::lock_guard lock(mutex_);
    entries_[key] = Entry{state.version(), matrix};
    ++builds_;
    return matrix;
}

std::size_t CoOccurrenceCache::builds() const {
    std::lock_guard lock(mutex_);
    return builds_;
}

void CoOccurrenceCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

std::vector<double> RelevanceResult::probabilities() const {
    std::vector<double> out(hits.size());
    for (std::size_t r = 0; r < hits.size(); ++r) out[r] = probability(r);
    return out;
}

namespace {

void check_query(const Ensemble& ensemble, const RelevanceQuery& query, bool existing_only) {
    if (ensemble.size() == 0) throw ModelError("ensemble has no models");
    const CrossCatState& first = ensemble.states.front();
    if (query.context >= first.num_cols()) throw ModelError("unknown context column");
    if (query.existing.empty() && query.hypothetical.empty()) throw ModelError("relevance query has no query rows");
    if (existing_only && !query.hypothetical.empty())
        throw ModelError("this estimator accepts existing query rows only");
    for (auto r : query.existing) {
        if (r >= first.num_rows()) throw ModelError("query row " + std::to_string(r) + " does not exist");
    }
    for (const auto& record : query.hypothetical) {
        for (const auto& obs : record) {
            if (obs.column >= first.num_cols()) throw ModelError("hypothetical record names an unknown column");
        }
    }
}

// Rows r < N of `matrix` whose group count equals |Q|, accumulated into hits.
void accumulate_hits(const CoOccurrenceMatrix& matrix, const std::vector<std::uint32_t>& query_groups,
                     std::size_t num_groups, std::size_t num_rows, std::vector<std::uint32_t>& hits) {
    std::vector<std::uint32_t> counts(num_groups, 0);
    for (auto g : query_groups) ++counts[g];
    const auto q = static_cast<std::uint32_t>(query_groups.size());
    // Only a group holding every query row can reach the count; scan it alone.
    for (std::size_t g = 0; g < matrix.groups.size(); ++g) {
        if (counts[g] != q) continue;
        for (auto r : matrix.groups[g]) {
            if (r < num_rows) ++hits[r];
        }
    }
}

std::uint64_t query_hash(const RelevanceQuery& query) {
    std::uint64_t h = mix64(query.context + 0x51ED27);
    auto feed = [&h](std::uint64_t x) { h = mix64(h ^ x); };
    for (auto r : query.existing) feed(r);
    feed(0xABCDEF);
    for (const auto& record : query.hypothetical) {
        feed(record.size());
        for (const auto& obs : record) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &obs.value, sizeof(bits));
            feed(obs.column);
            feed(bits);
        }
    }
    return h;
}

}  // namespace

std::vector<std::uint8_t> relevance_indicators(const CrossCatState& state, const RelevanceQuery& query) {
    const std::size_t k = state.block_of(query.context);
    std::vector<std::uint8_t> out(state.num_rows(), 0);
    for (RowId r = 0; r < state.num_rows(); ++r) {
        bool all = true;
        for (auto q : query.existing) {
            if (state.cluster_of(k, q) != state.cluster_of(k, r)) {
                all = false;
                break;
            }
        }
        out[r] = all ? 1 : 0;
    }
    return out;
}

RelevanceResult relevance_naive(const Ensemble& ensemble, const RelevanceQuery& query) {
    check_query(ensemble, query, true);
    RelevanceResult result;
    result.num_states = ensemble.size();
    result.hits.assign(ensemble.states.front().num_rows(), 0);
    for (const auto& state : ensemble.states) {
        const auto ind = relevance_indicators(state, query);
        for (RowId r = 0; r < ind.size(); ++r) result.hits[r] += ind[r];
    }
    return result;
}

RelevanceResult relevance_fast(const Ensemble& ensemble, CoOccurrenceCache& cache, const RelevanceQuery& query) {
    check_query(ensemble, query, true);
    RelevanceResult result;
    result.num_states = ensemble.size();
    const std::size_t n = ensemble.states.front().num_rows();
    result.hits.assign(n, 0);
    std::vector<std::uint32_t> query_groups;
    for (const auto& state : ensemble.states) {
        const auto matrix = cache.get(state, state.block_of(query.context));
        query_groups.clear();
        for (auto q : query.existing) query_groups.push_back(matrix->row_to_group[q]);
        accumulate_hits(*matrix, query_groups, matrix->groups.size(), n, result.hits);
    }
    return result;
}

RecordToken incorporate_record(CrossCatState& state, std::size_t context, std::span<const Observation> record,
                               Rng& rng) {
    if (context >= state.num_cols()) throw ModelError("unknown context column");
    return state.incorporate_record(state.block_of(context), record, rng);
}

void unincorporate_record(CrossCatState& state, const RecordToken& token) { state.unincorporate_record(token); }

RelevanceResult relevance_query(const Ensemble& ensemble, CoOccurrenceCache& cache, const RelevanceQuery& query) {
    if (query.hypothetical.empty()) return relevance_fast(ensemble, cache, query);
    check_query(ensemble, query, false);
    RelevanceResult result;
    result.num_states = ensemble.size();
    const std::size_t n = ensemble.states.front().num_rows();
    result.hits.assign(n, 0);
    const std::uint64_t qh = query_hash(query);

    std::vector<std::size_t> ignored(ensemble.states.front().num_cols(), 0);
    std::vector<std::uint32_t> query_groups;
    for (std::size_t h = 0; h < ensemble.size(); ++h) {
        const CrossCatState& base = ensemble.states[h];
        const std::size_t k = base.block_of(query.context);
        const auto matrix = cache.get(base, k);
        for (const auto& record : query.hypothetical) {
            for (const auto& obs : record) {
                if (base.block_of(obs.column) != k) ++ignored[obs.column];
            }
        }

        CrossCatState scratch = base;
        Rng rng(mix64(ensemble.seeds[h] ^ mix64(matrix->state_fingerprint ^ qh)));
        std::vector<std::uint32_t> slots;
        for (const auto& record : query.hypothetical) {
            const RecordToken token = scratch.incorporate_record(k, record, rng);
            slots.push_back(token.cluster);
        }

        // Hypothetical rows reuse the base groups of the clusters they joined;
        // rows in clusters absent from the base get fresh group numbers.
        std::size_t num_groups = matrix->groups.size();
        std::vector<std::pair<std::uint32_t, std::uint32_t>> fresh;
        query_groups.clear();
        for (auto q : query.existing) query_groups.push_back(matrix->row_to_group[q]);
        for (auto slot : slots) {
            std::uint32_t g = slot < matrix->slot_to_group.size() ? matrix->slot_to_group[slot]
                                                                   : CoOccurrenceMatrix::kNoGroup;
            if (g == CoOccurrenceMatrix::kNoGroup) {
                auto it = std::find_if(fresh.begin(), fresh.end(), [&](const auto& p) { return p.first == slot; });
                if (it == fresh.end()) {
                    fresh.emplace_back(slot, static_cast<std::uint32_t>(num_groups++));
                    it = fresh.end() - 1;
                }
                g = it->second;
            }
            query_groups.push_back(g);
        }
        accumulate_hits(*matrix, query_groups, num_groups, n, result.hits);
    }
    for (std::size_t c = 0; c < ignored.size(); ++c) {
        if (ignored[c] > 0) result.ignored_columns.emplace_back(c, ignored[c]);
    }
    return result;
}

double dependence_probability(const Ensemble& ensemble, std::size_t c1, std::size_t c2) {
    if (ensemble.size() == 0) throw ModelError("ensemble has no models");
    const std::size_t p = ensemble.states.front().num_cols();
    if (c1 >= p || c2 >= p) throw ModelError("unknown column in dependence probability");
    std::size_t same = 0;
    for (const auto& state : ensemble.states) same += state.block_of(c1) == state.block_of(c2) ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(ensemble.size());
}

std::vector<std::vector<double>> pairwise_dependence(const Ensemble& ensemble) {
    if (ensemble.size() == 0) throw ModelError("ensemble has no models");
    const std::size_t p = ensemble.states.front().num_cols();
    std::vector<std::vector<double>> out(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) out[i][j] = out[j][i] = dependence_probability(ensemble, i, j);
    }
    return out;
}

}  // namespace relquery
