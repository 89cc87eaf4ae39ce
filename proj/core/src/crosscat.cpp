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
#include "relquery/crosscat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "relquery/errors.hpp"

namespace relquery {

namespace {

std::atomic<std::uint64_t> g_next_version{1};
std::atomic<std::uint64_t> g_next_uid{1};

std::uint64_t fresh_version() { return g_next_version.fetch_add(1, std::memory_order_relaxed); }
std::uint64_t fresh_uid() { return g_next_uid.fetch_add(1, std::memory_order_relaxed); }

// Fresh blocks created by column moves start from this row concentration.
constexpr double kFreshBlockAlpha = 1.0;

std::vector<SuffStats> empty_stats_for(const std::vector<std::size_t>& columns,
                                       const std::vector<Hyperparams>& hypers) {
    std::vector<SuffStats> out;
    out.reserve(columns.size());
    for (auto c : columns) out.push_back(empty_stats(hypers[c]));
    return out;
}

std::uint64_t double_bits(double x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof(bits));
    return bits;
}

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

bool stats_match(const SuffStats& a, const SuffStats& b) {
    if (a.index() != b.index()) return false;
    if (const auto* na = std::get_if<NormalStats>(&a)) {
        const auto& nb = std::get<NormalStats>(b);
        return na->n == nb.n && close_rel(na->sum, nb.sum, 1e-9) && close_rel(na->sum_sq, nb.sum_sq, 1e-9);
    }
    if (const auto* pa = std::get_if<PoissonStats>(&a)) {
        const auto& pb = std::get<PoissonStats>(b);
        return pa->n == pb.n && pa->sum == pb.sum &&
               close_rel(pa->sum_log_factorial, pb.sum_log_factorial, 1e-9);
    }
    if (const auto* ma = std::get_if<MultinomialStats>(&a)) {
        const auto& mb = std::get<MultinomialStats>(b);
        if (ma->n != mb.n) return false;
        const std::size_t len = std::max(ma->counts.size(), mb.counts.size());
        for (std::size_t i = 0; i < len; ++i) {
            const auto ca = i < ma->counts.size() ? ma->counts[i] : 0;
            const auto cb = i < mb.counts.size() ? mb.counts[i] : 0;
            if (ca != cb) return false;
        }
        return true;
    }
    return a == b;
}

template <class Feed>
void feed_stats(const SuffStats& stats, Feed&& feed) {
    feed(stats.index());
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            feed(st.n);
            if constexpr (std::is_same_v<T, BernoulliStats>) {
                feed(st.heads);
            } else if constexpr (std::is_same_v<T, MultinomialStats>) {
                for (auto c : st.counts) feed(c);
            } else if constexpr (std::is_same_v<T, NormalStats>) {
                feed(double_bits(st.sum));
                feed(double_bits(st.sum_sq));
            } else {
                feed(st.sum);
                feed(double_bits(st.sum_log_factorial));
            }
        },
        stats);
}

}  // namespace

std::size_t Block::num_clusters() const {
    return clusters.size() - free_slots.size();
}

std::vector<std::uint32_t> Block::live_clusters() const {
    std::vector<std::uint32_t> out;
    out.reserve(num_clusters());
    for (std::uint32_t s = 0; s < clusters.size(); ++s) {
        if (clusters[s].size > 0) out.push_back(s);
    }
    return out;
}

std::vector<std::size_t> Block::cluster_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& cl : clusters) {
        if (cl.size > 0) out.push_back(cl.size);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CRP helpers

std::vector<double> crp_weights(std::span<const std::size_t> cluster_sizes, double alpha) {
    if (!(alpha > 0.0)) throw ModelError("CRP concentration must be positive");
    double total = alpha;
    for (auto size : cluster_sizes) {
        if (size == 0) throw ModelError("CRP cluster sizes must be positive");
        total += static_cast<double>(size);
    }
    std::vector<double> out;
    out.reserve(cluster_sizes.size() + 1);
    for (auto size : cluster_sizes) out.push_back(static_cast<double>(size) / total);
    out.push_back(alpha / total);
    return out;
}

double crp_log_probability(std::span<const std::size_t> cluster_sizes, double alpha) {
    if (!(alpha > 0.0)) throw ModelError("CRP concentration must be positive");
    double n = 0;
    double out = 0;
    for (auto size : cluster_sizes) {
        n += static_cast<double>(size);
        out += std::log(alpha) + std::lgamma(static_cast<double>(size));
    }
    return out + std::lgamma(alpha) - std::lgamma(alpha + n);
}

std::vector<std::uint32_t> sample_crp_partition(std::size_t n, double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw ModelError("CRP concentration must be positive");
    std::vector<std::uint32_t> labels(n, 0);
    std::vector<double> sizes;
    for (std::size_t i = 0; i < n; ++i) {
        double target = rng.uniform() * (static_cast<double>(i) + alpha);
        std::size_t pick = sizes.size();
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            target -= sizes[k];
            if (target < 0) {
                pick = k;
                break;
            }
        }
        if (pick == sizes.size()) sizes.push_back(0);
        sizes[pick] += 1;
        labels[i] = static_cast<std::uint32_t>(pick);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// CrossCatState

CrossCatState::CrossCatState(const DataTable& table, const std::vector<std::size_t>& column_to_block,
                             const std::vector<std::vector<std::uint32_t>>& row_partitions, double alpha0,
                             const std::vector<double>& alpha1, std::vector<Hyperparams> hypers)
    : alpha0_(alpha0), hypers_(std::move(hypers)) {
    const std::size_t p = table.num_cols();
    if (column_to_block.size() != p) throw ModelError("column partition length differs from column count");
    const std::size_t num_blocks = row_partitions.size();
    if (alpha1.size() != num_blocks) throw ModelError("one alpha1 is required per block");
    std::vector<BlockLayout> layout(num_blocks);
    for (std::size_t c = 0; c < p; ++c) {
        if (column_to_block[c] >= num_blocks) throw ModelError("block label out of range");
        layout[column_to_block[c]].columns.push_back(c);
    }
    for (std::size_t k = 0; k < num_blocks; ++k) {
        if (row_partitions[k].size() != table.num_rows()) throw ModelError("row partition length differs from N");
        std::unordered_map<std::uint32_t, std::uint32_t> relabel;
        layout[k].alpha = alpha1[k];
        for (auto label : row_partitions[k]) {
            auto [it, inserted] = relabel.emplace(label, static_cast<std::uint32_t>(relabel.size()));
            layout[k].assignments.push_back(it->second);
        }
        layout[k].num_slots = relabel.size();
    }
    init(table, std::move(layout));
}

CrossCatState CrossCatState::from_layout(const DataTable& table, std::vector<BlockLayout> layout, double alpha0,
                                         std::vector<Hyperparams> hypers) {
    CrossCatState state;
    state.alpha0_ = alpha0;
    state.hypers_ = std::move(hypers);
    state.init(table, std::move(layout));
    return state;
}

void CrossCatState::init(const DataTable& table, std::vector<BlockLayout> layout) {
    num_rows_ = table.num_rows();
    version_ = fresh_version();
    uid_ = fresh_uid();
    const std::size_t p = table.num_cols();
    if (num_rows_ == 0 || p == 0) throw ModelError("a state needs at least one row and one column");
    if (hypers_.size() != p) throw ModelError("one hyperparameter set is required per column");
    if (!(alpha0_ > 0)) throw ModelError("alpha0 must be positive");
    for (std::size_t c = 0; c < p; ++c) {
        check_hyperparams(hypers_[c]);
        const auto expected = table.column(c).type.kind == StatKind::binary        ? 0u
                              : table.column(c).type.kind == StatKind::categorical ? 1u
                              : table.column(c).type.kind == StatKind::numerical   ? 2u
                                                                                   : 3u;
        if (hypers_[c].index() != expected)
            throw ModelError("hyperparameter family does not match column \"" + table.column(c).name + "\"");
    }
    column_to_block_.assign(p, layout.size());
    blocks_.resize(layout.size());
    for (std::size_t k = 0; k < layout.size(); ++k) {
        BlockLayout& l = layout[k];
        Block& block = blocks_[k];
        if (l.columns.empty()) throw ModelError("block " + std::to_string(k) + " has no columns");
        for (auto c : l.columns) {
            if (c >= p || column_to_block_[c] != layout.size()) throw ModelError("columns do not form a partition");
            column_to_block_[c] = k;
        }
        if (l.assignments.size() != num_rows_) throw ModelError("row partition length differs from N");
        if (!(l.alpha > 0)) throw ModelError("alpha1 must be positive");
        for (auto slot : l.assignments) {
            if (slot >= l.num_slots) throw ModelError("cluster slot out of range");
        }
        block.columns = std::move(l.columns);
        block.assignments = std::move(l.assignments);
        block.alpha = l.alpha;
        block.clusters.resize(l.num_slots);
        build_block_stats(block, table);
    }
    for (auto k : column_to_block_) {
        if (k == layout.size()) throw ModelError("column missing from every block");
    }
}

CrossCatState::CrossCatState(const CrossCatState& other)
    : num_rows_(other.num_rows_),
      column_to_block_(other.column_to_block_),
      blocks_(other.blocks_),
      alpha0_(other.alpha0_),
      hypers_(other.hypers_),
      pending_(other.pending_),
      version_(other.version_),
      uid_(fresh_uid()) {
    for (auto& pr : pending_) pr.token.state_uid = uid_;
}

CrossCatState& CrossCatState::operator=(const CrossCatState& other) {
    if (this == &other) return *this;
    CrossCatState copy(other);
    *this = std::move(copy);
    return *this;
}

void CrossCatState::touch() { version_ = fresh_version(); }

void CrossCatState::require_no_pending(const char* op) const {
    if (!pending_.empty())
        throw ModelError(std::string(op) + " is not allowed while hypothetical records are incorporated");
}

void CrossCatState::build_block_stats(Block& block, const DataTable& table) const {
    for (auto& cl : block.clusters) {
        cl.size = 0;
        cl.stats = empty_stats_for(block.columns, hypers_);
    }
    for (RowId r = 0; r < num_rows_; ++r) {
        Cluster& cl = block.clusters[block.assignments[r]];
        ++cl.size;
        for (std::size_t j = 0; j < block.columns.size(); ++j) {
            const std::size_t c = block.columns[j];
            if (table.is_present(r, c)) incorporate_value(cl.stats[j], table.value(r, c));
        }
    }
    block.free_slots.clear();
    for (std::uint32_t s = 0; s < block.clusters.size(); ++s) {
        if (block.clusters[s].size == 0) block.free_slots.push_back(s);
    }
}

std::uint32_t CrossCatState::take_slot(Block& block) {
    if (!block.free_slots.empty()) {
        const std::uint32_t slot = block.free_slots.back();
        block.free_slots.pop_back();
        return slot;
    }
    block.clusters.push_back(Cluster{0, empty_stats_for(block.columns, hypers_)});
    return static_cast<std::uint32_t>(block.clusters.size() - 1);
}

void CrossCatState::release_slot(Block& block, std::uint32_t slot) {
    Cluster& cl = block.clusters[slot];
    cl.size = 0;
    cl.stats = empty_stats_for(block.columns, hypers_);
    block.free_slots.push_back(slot);
}

std::vector<std::uint32_t> CrossCatState::canonical_partition(std::size_t k) const {
    const Block& block = blocks_.at(k);
    std::unordered_map<std::uint32_t, std::uint32_t> relabel;
    std::vector<std::uint32_t> out;
    out.reserve(block.assignments.size());
    for (auto slot : block.assignments) {
        auto [it, inserted] = relabel.emplace(slot, static_cast<std::uint32_t>(relabel.size()));
        out.push_back(it->second);
    }
    return out;
}

std::vector<std::size_t> CrossCatState::canonical_column_partition() const {
    std::unordered_map<std::size_t, std::size_t> relabel;
    std::vector<std::size_t> out;
    for (auto k : column_to_block_) {
        auto [it, inserted] = relabel.emplace(k, relabel.size());
        out.push_back(it->second);
    }
    return out;
}

std::uint64_t CrossCatState::fingerprint() const {
    std::uint64_t h = 0x84222325CBF29CE4ull;
    auto feed = [&h](std::uint64_t x) { h = mix64(h ^ x); };
    feed(num_rows_);
    feed(double_bits(alpha0_));
    feed(pending_.size());
    for (const auto& hyper : hypers_) {
        feed(hyper.index());
        for (double v : hyper_values(hyper)) feed(double_bits(v));
    }
    for (auto label : canonical_column_partition()) feed(label);
    // Visit blocks in first-appearance order so block ids do not matter.
    std::vector<bool> seen(blocks_.size(), false);
    for (auto k : column_to_block_) {
        if (seen[k]) continue;
        seen[k] = true;
        const Block& block = blocks_[k];
        feed(double_bits(block.alpha));
        for (auto c : block.columns) feed(c);
        std::vector<bool> cluster_seen(block.clusters.size(), false);
        for (auto slot : block.assignments) {
            feed(slot == block.assignments.front() ? 0 : 1);
            if (cluster_seen[slot]) continue;
            cluster_seen[slot] = true;
            feed(block.clusters[slot].size);
            for (const auto& st : block.clusters[slot].stats) feed_stats(st, feed);
        }
        for (auto label : canonical_partition(k)) feed(label);
    }
    return h;
}

void CrossCatState::validate(const DataTable& table) const {
    auto fail = [](const std::string& why) { throw ModelError("invalid CrossCat state: " + why); };
    if (table.num_rows() != num_rows_ || table.num_cols() != column_to_block_.size())
        fail("table shape differs from state");
    std::vector<std::size_t> counted(blocks_.size(), 0);
    for (std::size_t c = 0; c < column_to_block_.size(); ++c) {
        const std::size_t k = column_to_block_[c];
        if (k >= blocks_.size()) fail("column assigned to missing block");
        const auto& cols = blocks_[k].columns;
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) fail("block column list disagrees with v");
        ++counted[k];
    }
    std::vector<std::size_t> pending_in_block(blocks_.size(), 0);
    for (const auto& pr : pending_) ++pending_in_block[pr.token.block];
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Block& block = blocks_[k];
        if (block.columns.empty() || counted[k] != block.columns.size()) fail("empty or inconsistent block");
        if (!(block.alpha > 0)) fail("non-positive alpha1");
        if (block.assignments.size() != num_rows_ + pending_in_block[k]) fail("assignment length mismatch");
        // Rebuild from scratch and compare.
        std::vector<Cluster> rebuilt(block.clusters.size(), Cluster{0, empty_stats_for(block.columns, hypers_)});
        for (std::size_t r = 0; r < block.assignments.size(); ++r) {
            const auto slot = block.assignments[r];
            if (slot >= block.clusters.size()) fail("row assigned to missing cluster");
            ++rebuilt[slot].size;
            if (r >= num_rows_) continue;
            for (std::size_t j = 0; j < block.columns.size(); ++j) {
                if (table.is_present(r, block.columns[j]))
                    incorporate_value(rebuilt[slot].stats[j], table.value(r, block.columns[j]));
            }
        }
        for (const auto& pr : pending_) {
            if (pr.token.block != k) continue;
            for (const auto& obs : pr.observations) {
                const auto it = std::find(block.columns.begin(), block.columns.end(), obs.column);
                incorporate_value(rebuilt[pr.token.cluster].stats[it - block.columns.begin()], obs.value);
            }
        }
        std::vector<std::uint32_t> dead;
        for (std::uint32_t s = 0; s < block.clusters.size(); ++s) {
            if (block.clusters[s].size != rebuilt[s].size) fail("cluster size mismatch");
            if (block.clusters[s].stats.size() != block.columns.size()) fail("statistics misaligned");
            if (rebuilt[s].size == 0) dead.push_back(s);
            for (std::size_t j = 0; j < block.columns.size(); ++j) {
                if (!stats_match(block.clusters[s].stats[j], rebuilt[s].stats[j]))
                    fail("sufficient statistics differ from rebuild in block " + std::to_string(k));
            }
        }
        auto free_sorted = block.free_slots;
        std::sort(free_sorted.begin(), free_sorted.end());
        if (free_sorted != dead) fail("free slot list disagrees with empty clusters");
    }
}

std::vector<double> CrossCatState::record_log_weights(std::size_t k, std::span<const Observation> record,
                                                      std::vector<std::uint32_t>& slots) const {
    const Block& block = blocks_.at(k);
    std::vector<std::pair<std::size_t, double>> local;
    for (const auto& obs : record) {
        const auto it = std::find(block.columns.begin(), block.columns.end(), obs.column);
        if (it != block.columns.end()) local.emplace_back(static_cast<std::size_t>(it - block.columns.begin()), obs.value);
    }
    slots = block.live_clusters();
    std::vector<double> out;
    out.reserve(slots.size() + 1);
    for (auto slot : slots) {
        const Cluster& cl = block.clusters[slot];
        double lw = std::log(static_cast<double>(cl.size));
        for (const auto& [j, x] : local) lw += log_predictive(x, cl.stats[j], hypers_[block.columns[j]]);
        out.push_back(lw);
    }
    double singleton = std::log(block.alpha);
    for (const auto& [j, x] : local) {
        const Hyperparams& hyper = hypers_[block.columns[j]];
        singleton += log_predictive(x, empty_stats(hyper), hyper);
    }
    out.push_back(singleton);
    return out;
}

RecordToken CrossCatState::incorporate_record(std::size_t k, std::span<const Observation> record, Rng& rng) {
    if (k >= blocks_.size()) throw ModelError("unknown block");
    Block& block = blocks_[k];
    PendingRecord pr;
    for (const auto& obs : record) {
        if (obs.column >= column_to_block_.size()) throw SchemaError("record names an unknown column");
        check_domain(obs.value, hypers_[obs.column]);
        if (column_to_block_[obs.column] == k) pr.observations.push_back(obs);
    }
    std::vector<std::uint32_t> slots;
    const std::vector<double> lw = record_log_weights(k, pr.observations, slots);
    const std::size_t pick = rng.categorical_log(lw);

    pr.prior_version = version_;
    pr.prior_free_slots = block.free_slots;
    std::uint32_t slot = 0;
    if (pick < slots.size()) {
        slot = slots[pick];
    } else {
        pr.appended_slot = block.free_slots.empty();
        slot = take_slot(block);
    }
    Cluster& cl = block.clusters[slot];
    pr.prior_stats = cl.stats;
    for (const auto& obs : pr.observations) {
        const auto it = std::find(block.columns.begin(), block.columns.end(), obs.column);
        incorporate_value(cl.stats[it - block.columns.begin()], obs.value);
    }
    ++cl.size;
    block.assignments.push_back(slot);

    pr.token = RecordToken{uid_, pending_.size(), k, block.assignments.size() - 1, slot};
    pending_.push_back(std::move(pr));
    touch();
    return pending_.back().token;
}

void CrossCatState::unincorporate_record(const RecordToken& token) {
    if (pending_.empty()) throw ModelError("no incorporated record to remove");
    PendingRecord& pr = pending_.back();
    if (token.state_uid != uid_ || token.depth != pr.token.depth || token.block != pr.token.block ||
        token.row != pr.token.row || token.cluster != pr.token.cluster)
        throw ModelError("record token is foreign or out of LIFO order");
    Block& block = blocks_[token.block];
    block.assignments.pop_back();
    Cluster& cl = block.clusters[token.cluster];
    --cl.size;
    cl.stats = std::move(pr.prior_stats);
    if (pr.appended_slot) block.clusters.pop_back();
    block.free_slots = std::move(pr.prior_free_slots);
    version_ = pr.prior_version;
    pending_.pop_back();
}

// ---------------------------------------------------------------------------
// Prior and score

CrossCatState prior_sample(const DataTable& table, double alpha0, double alpha1, Rng& rng) {
    if (table.num_rows() == 0 || table.num_cols() == 0)
        throw ModelError("prior_sample needs N >= 1 and p >= 1");
    const auto v_labels = sample_crp_partition(table.num_cols(), alpha0, rng);
    const std::size_t num_blocks = *std::max_element(v_labels.begin(), v_labels.end()) + 1;
    std::vector<std::size_t> v(v_labels.begin(), v_labels.end());
    std::vector<std::vector<std::uint32_t>> partitions;
    for (std::size_t k = 0; k < num_blocks; ++k)
        partitions.push_back(sample_crp_partition(table.num_rows(), alpha1, rng));
    std::vector<Hyperparams> hypers;
    for (std::size_t c = 0; c < table.num_cols(); ++c) hypers.push_back(default_hyperparams(table, c));
    return CrossCatState(table, v, partitions, alpha0, std::vector<double>(num_blocks, alpha1), std::move(hypers));
}

double log_joint_score(const CrossCatState& state) {
    std::vector<std::size_t> block_sizes;
    for (const auto& block : state.blocks()) block_sizes.push_back(block.columns.size());
    double score = crp_log_probability(block_sizes, state.alpha0());
    for (const auto& block : state.blocks()) {
        score += crp_log_probability(block.cluster_sizes(), block.alpha);
        for (const auto& cl : block.clusters) {
            if (cl.size == 0) continue;
            for (std::size_t j = 0; j < block.columns.size(); ++j)
                score += log_marginal(cl.stats[j], state.hyper(block.columns[j]));
        }
    }
    return score;
}

// ---------------------------------------------------------------------------
// Kernels

void gibbs_row_sweep(CrossCatState& state, const DataTable& table, Rng& rng) {
    state.require_no_pending("gibbs_row_sweep");
    const std::size_t n = state.num_rows_;
    std::vector<std::pair<std::size_t, double>> obs;
    std::vector<double> lw;
    std::vector<std::uint32_t> slots;
    for (Block& block : state.blocks_) {
        const std::size_t width = block.columns.size();
        std::vector<const Hyperparams*> hypers(width);
        std::vector<SuffStats> empties(width);
        for (std::size_t j = 0; j < width; ++j) {
            hypers[j] = &state.hypers_[block.columns[j]];
            empties[j] = empty_stats(*hypers[j]);
        }
        const double log_alpha = std::log(block.alpha);
        for (RowId r = 0; r < n; ++r) {
            obs.clear();
            for (std::size_t j = 0; j < width; ++j) {
                if (table.is_present(r, block.columns[j])) obs.emplace_back(j, table.value(r, block.columns[j]));
            }
            const std::uint32_t old_slot = block.assignments[r];
            {
                Cluster& cl = block.clusters[old_slot];
                for (const auto& [j, x] : obs) unincorporate_value(cl.stats[j], x);
                if (--cl.size == 0) state.release_slot(block, old_slot);
            }
            slots.clear();
            lw.clear();
            for (std::uint32_t s = 0; s < block.clusters.size(); ++s) {
                const Cluster& cl = block.clusters[s];
                if (cl.size == 0) continue;
                double w = std::log(static_cast<double>(cl.size));
                for (const auto& [j, x] : obs) w += log_predictive(x, cl.stats[j], *hypers[j]);
                slots.push_back(s);
                lw.push_back(w);
            }
            double singleton = log_alpha;
            for (const auto& [j, x] : obs) singleton += log_predictive(x, empties[j], *hypers[j]);
            lw.push_back(singleton);
            const std::size_t pick = rng.categorical_log(lw);
            const std::uint32_t slot = pick < slots.size() ? slots[pick] : state.take_slot(block);
            Cluster& target = block.clusters[slot];
            for (const auto& [j, x] : obs) incorporate_value(target.stats[j], x);
            ++target.size;
            block.assignments[r] = slot;
        }
        // Recompute from scratch so real accumulators depend only on the
        // partition, not on the order of moves that produced it.
        state.build_block_stats(block, table);
    }
    state.touch();
}

namespace {

// Statistics of one column under a block's row partition, one entry per slot.
std::vector<SuffStats> column_stats_under(const std::vector<std::uint32_t>& assignments, std::size_t num_slots,
                                          const DataTable& table, std::size_t col, const Hyperparams& hyper) {
    std::vector<SuffStats> stats(num_slots, empty_stats(hyper));
    for (RowId r = 0; r < table.num_rows(); ++r) {
        if (table.is_present(r, col)) incorporate_value(stats[assignments[r]], table.value(r, col));
    }
    return stats;
}

double sum_log_marginal(const std::vector<SuffStats>& stats, const Hyperparams& hyper) {
    double out = 0;
    for (const auto& st : stats) {
        if (stats_count(st) > 0) out += log_marginal(st, hyper);
    }
    return out;
}

}  // namespace

void gibbs_column_sweep(CrossCatState& state, const DataTable& table, Rng& rng) {
    state.require_no_pending("gibbs_column_sweep");
    const std::size_t p = state.num_cols();
    const std::size_t n = state.num_rows_;
    for (std::size_t c = 0; c < p; ++c) {
        const Hyperparams& hyper = state.hypers_[c];
        const std::size_t k_old = state.column_to_block_[c];
        {
            Block& old = state.blocks_[k_old];
            const auto it = std::find(old.columns.begin(), old.columns.end(), c);
            const auto j = static_cast<std::size_t>(it - old.columns.begin());
            old.columns.erase(it);
            for (auto& cl : old.clusters) cl.stats.erase(cl.stats.begin() + static_cast<std::ptrdiff_t>(j));
        }
        const bool was_singleton = state.blocks_[k_old].columns.empty();

        std::vector<std::size_t> candidates;
        std::vector<std::vector<SuffStats>> candidate_stats;
        std::vector<double> lw;
        for (std::size_t k = 0; k < state.blocks_.size(); ++k) {
            if (was_singleton && k == k_old) continue;
            const Block& block = state.blocks_[k];
            auto stats = column_stats_under(block.assignments, block.clusters.size(), table, c, hyper);
            lw.push_back(std::log(static_cast<double>(block.columns.size())) + sum_log_marginal(stats, hyper));
            candidates.push_back(k);
            candidate_stats.push_back(std::move(stats));
        }

        // Auxiliary block: the vacated block when c was alone, otherwise a
        // fresh row partition drawn from the CRP prior.
        Block auxiliary;
        if (was_singleton) {
            auxiliary = std::move(state.blocks_[k_old]);
        } else {
            const auto labels = sample_crp_partition(n, kFreshBlockAlpha, rng);
            auxiliary.alpha = kFreshBlockAlpha;
            auxiliary.assignments = labels;
            const std::size_t num_clusters = *std::max_element(labels.begin(), labels.end()) + 1;
            auxiliary.clusters.resize(num_clusters);
            for (auto label : labels) ++auxiliary.clusters[label].size;
        }
        auto aux_stats = column_stats_under(auxiliary.assignments, auxiliary.clusters.size(), table, c, hyper);
        lw.push_back(std::log(state.alpha0_) + sum_log_marginal(aux_stats, hyper));

        const std::size_t pick = rng.categorical_log(lw);
        if (pick < candidates.size()) {
            const std::size_t k = candidates[pick];
            Block& block = state.blocks_[k];
            block.columns.push_back(c);
            for (std::size_t s = 0; s < block.clusters.size(); ++s)
                block.clusters[s].stats.push_back(std::move(candidate_stats[pick][s]));
            state.column_to_block_[c] = k;
            if (was_singleton) {
                state.blocks_.erase(state.blocks_.begin() + static_cast<std::ptrdiff_t>(k_old));
                for (auto& v : state.column_to_block_) {
                    if (v > k_old) --v;
                }
            }
        } else {
            auxiliary.columns = {c};
            for (std::size_t s = 0; s < auxiliary.clusters.size(); ++s) {
                auxiliary.clusters[s].stats.clear();
                auxiliary.clusters[s].stats.push_back(std::move(aux_stats[s]));
            }
            if (was_singleton) {
                state.blocks_[k_old] = std::move(auxiliary);
                state.column_to_block_[c] = k_old;
            } else {
                auxiliary.free_slots.clear();
                state.blocks_.push_back(std::move(auxiliary));
                state.column_to_block_[c] = state.blocks_.size() - 1;
            }
        }
    }
    state.touch();
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> column_alpha_grid(std::size_t num_cols) {
    return log_grid(1.0, static_cast<double>(std::max<std::size_t>(num_cols, 2)));
}

std::vector<double> row_alpha_grid(std::size_t num_rows) {
    return log_grid(1.0, static_cast<double>(std::max<std::size_t>(num_rows, 2)));
}

std::vector<double> hyper_grid(const DataTable& table, std::size_t col, const Hyperparams& hyper,
                               std::size_t index) {
    const double n = static_cast<double>(std::max<std::size_t>(table.num_rows(), 2));
    switch (hyper.index()) {
        case 0:
        case 1: return log_grid(1.0 / n, n);
        default: break;
    }
    double count = 0, sum = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (RowId r = 0; r < table.num_rows(); ++r) {
        if (!table.is_present(r, col)) continue;
        const double x = table.value(r, col);
        count += 1;
        sum += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double mean = count > 0 ? sum / count : 0.0;
    if (hyper.index() == 2) {
        if (index == 0) {
            if (!(count > 0)) lo = hi = 0.0;
            if (hi <= lo) {
                lo -= 1.0;
                hi += 1.0;
            }
            std::vector<double> out(kHyperGridSize);
            for (std::size_t i = 0; i < kHyperGridSize; ++i)
                out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kHyperGridSize - 1);
            return out;
        }
        if (index == 1) return log_grid(1.0 / n, n);
        if (index == 3) return log_grid(1.0, n);
        double scatter = 0;
        for (RowId r = 0; r < table.num_rows(); ++r) {
            if (!table.is_present(r, col)) continue;
            const double d = table.value(r, col) - mean;
            scatter += d * d;
        }
        if (!(scatter > 0)) scatter = 1.0;
        return log_grid(scatter / 100.0, scatter);
    }
    if (index == 0) return log_grid(1.0 / n, n);
    const double scale = std::max(mean, 1e-2);
    return log_grid(0.01 / scale, 100.0 / scale);
}

void hyper_grid_gibbs(CrossCatState& state, const DataTable& table, Rng& rng) {
    state.require_no_pending("hyper_grid_gibbs");
    std::vector<double> lw(kHyperGridSize);

    std::vector<std::size_t> block_sizes;
    for (const auto& block : state.blocks_) block_sizes.push_back(block.columns.size());
    const auto alpha0_grid = column_alpha_grid(state.num_cols());
    for (std::size_t i = 0; i < alpha0_grid.size(); ++i) lw[i] = crp_log_probability(block_sizes, alpha0_grid[i]);
    state.alpha0_ = alpha0_grid[rng.categorical_log(lw)];

    const auto alpha1_grid = row_alpha_grid(state.num_rows_);
    for (Block& block : state.blocks_) {
        const auto sizes = block.cluster_sizes();
        for (std::size_t i = 0; i < alpha1_grid.size(); ++i) lw[i] = crp_log_probability(sizes, alpha1_grid[i]);
        block.alpha = alpha1_grid[rng.categorical_log(lw)];
    }

    for (Block& block : state.blocks_) {
        for (std::size_t j = 0; j < block.columns.size(); ++j) {
            const std::size_t c = block.columns[j];
            Hyperparams& hyper = state.hypers_[c];
            const std::size_t dims = hyper_values(hyper).size();
            for (std::size_t d = 0; d < dims; ++d) {
                const auto grid = hyper_grid(table, c, hyper, d);
                Hyperparams trial = hyper;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    set_hyper_value(trial, d, grid[i]);
                    double score = 0;
                    for (const auto& cl : block.clusters) {
                        if (cl.size > 0) score += log_marginal(cl.stats[j], trial);
                    }
                    lw[i] = score;
                }
                set_hyper_value(hyper, d, grid[rng.categorical_log(std::span<const double>(lw.data(), grid.size()))]);
            }
        }
    }
    state.touch();
}

void set_alpha0(CrossCatState& state, double alpha0) {
    state.require_no_pending("set_alpha0");
    if (!(alpha0 > 0)) throw ModelError("alpha0 must be positive");
    state.alpha0_ = alpha0;
    state.touch();
}

void set_block_alpha(CrossCatState& state, std::size_t k, double alpha) {
    state.require_no_pending("set_block_alpha");
    if (!(alpha > 0)) throw ModelError("alpha1 must be positive");
    state.blocks_.at(k).alpha = alpha;
    state.touch();
}

void set_hyperparams(CrossCatState& state, std::size_t col, const Hyperparams& hyper) {
    state.require_no_pending("set_hyperparams");
    check_hyperparams(hyper);
    if (hyper.index() != state.hypers_.at(col).index()) throw ModelError("hyperparameter family mismatch");
    state.hypers_[col] = hyper;
    // Cached statistics are hyperparameter-independent except for their family.
    state.touch();
}

}  // namespace relquery
