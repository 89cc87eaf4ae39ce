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
#include <span>
#include <utility>
#include <vector>

#include "relquery/components.hpp"
#include "relquery/rng.hpp"
#include "relquery/table.hpp"

namespace relquery {

/// One cluster of rows inside a block; `stats[j]` covers `Block::columns[j]`.
struct Cluster {
    std::size_t size = 0;
    std::vector<SuffStats> stats;
};

/// One block of the column partition with its own row partition.
///
/// Cluster ids are slots into `clusters`; a slot with size 0 is free.
struct Block {
    std::vector<std::size_t> columns;
    std::vector<std::uint32_t> assignments;
    std::vector<Cluster> clusters;
    std::vector<std::uint32_t> free_slots;
    double alpha = 1.0;

    std::size_t num_clusters() const;
    /// Slot ids of non-empty clusters, ascending.
    std::vector<std::uint32_t> live_clusters() const;
    std::vector<std::size_t> cluster_sizes() const;
};

/// An observed value of one column in a partial record.
struct Observation {
    std::size_t column = 0;
    double value = 0.0;
    bool operator==(const Observation&) const = default;
};

/// Handle returned by `CrossCatState::incorporate_record`, consumed in LIFO order.
struct RecordToken {
    std::uint64_t state_uid = 0;
    std::size_t depth = 0;
    std::size_t block = 0;
    RowId row = 0;
    std::uint32_t cluster = 0;
};

/// Exact slot layout of one block, used to restore a persisted state.
struct BlockLayout {
    std::vector<std::size_t> columns;
    std::vector<std::uint32_t> assignments;
    std::size_t num_slots = 0;
    double alpha = 1.0;
};

/// A single posterior sample of the CrossCat latent structure: the column
/// partition, a row partition per block, concentrations, per-column
/// hyperparameters and cached sufficient statistics for every
/// (block, cluster, column).
class CrossCatState {
public:
    /// Builds a state from explicit assignments. `column_to_block` uses labels
    /// 0..B-1; `row_partitions[k]` holds arbitrary cluster labels for block k.
    CrossCatState(const DataTable& table, const std::vector<std::size_t>& column_to_block,
                  const std::vector<std::vector<std::uint32_t>>& row_partitions, double alpha0,
                  const std::vector<double>& alpha1, std::vector<Hyperparams> hypers);

    /// Rebuilds a state with the given block order, column order and cluster
    /// slots; statistics are recomputed from `table`.
    static CrossCatState from_layout(const DataTable& table, std::vector<BlockLayout> layout, double alpha0,
                                     std::vector<Hyperparams> hypers);

    CrossCatState(const CrossCatState& other);
    CrossCatState& operator=(const CrossCatState& other);
    CrossCatState(CrossCatState&&) noexcept = default;
    CrossCatState& operator=(CrossCatState&&) noexcept = default;

    std::size_t num_rows() const { return num_rows_; }
    std::size_t num_cols() const { return column_to_block_.size(); }
    std::size_t num_blocks() const { return blocks_.size(); }

    const std::vector<std::size_t>& column_to_block() const { return column_to_block_; }
    std::size_t block_of(std::size_t col) const { return column_to_block_.at(col); }
    const Block& block(std::size_t k) const { return blocks_.at(k); }
    const std::vector<Block>& blocks() const { return blocks_; }
    /// Cluster slot of `row` in block `k` (rows >= N are pending records).
    std::uint32_t cluster_of(std::size_t k, RowId row) const { return blocks_[k].assignments[row]; }

    double alpha0() const { return alpha0_; }
    const std::vector<Hyperparams>& hypers() const { return hypers_; }
    const Hyperparams& hyper(std::size_t col) const { return hypers_.at(col); }

    /// Changes on every mutation; restored by `unincorporate_record`.
    std::uint64_t version() const { return version_; }
    /// Unique per object; copies receive a fresh uid.
    std::uint64_t uid() const { return uid_; }

    /// Row partition of block `k` as canonical labels (first appearance order).
    std::vector<std::uint32_t> canonical_partition(std::size_t k) const;
    /// Block labels relabelled by first appearance.
    std::vector<std::size_t> canonical_column_partition() const;

    /// Label-invariant hash of partitions, concentrations, hyperparameters and
    /// sufficient statistics (bitwise for real accumulators).
    std::uint64_t fingerprint() const;

    /// Throws ModelError when a partition or cached statistic is inconsistent
    /// with `table` (statistics checked against a full rebuild).
    void validate(const DataTable& table) const;

    /// Pending record depth (records incorporated and not yet removed).
    std::size_t pending_records() const { return pending_.size(); }

    /// Log weights l_y for placing `record` in block `k`: one entry per live
    /// cluster (in `slots` order), then the singleton proposal.
    std::vector<double> record_log_weights(std::size_t k, std::span<const Observation> record,
                                           std::vector<std::uint32_t>& slots) const;

    /// Appends a new row to block `k`, sampling its cluster from existing
    /// clusters plus one singleton. Observations of columns outside block `k`
    /// are ignored.
    RecordToken incorporate_record(std::size_t k, std::span<const Observation> record, Rng& rng);

    /// Removes the most recently incorporated record, restoring statistics,
    /// free-slot order and version exactly. Throws ModelError for a foreign or
    /// out-of-order token.
    void unincorporate_record(const RecordToken& token);

    // Inference kernels; each leaves the state valid.
    friend void gibbs_row_sweep(CrossCatState& state, const DataTable& table, Rng& rng);
    friend void gibbs_column_sweep(CrossCatState& state, const DataTable& table, Rng& rng);
    friend void hyper_grid_gibbs(CrossCatState& state, const DataTable& table, Rng& rng);
    friend void set_alpha0(CrossCatState& state, double alpha0);
    friend void set_block_alpha(CrossCatState& state, std::size_t k, double alpha);
    friend void set_hyperparams(CrossCatState& state, std::size_t col, const Hyperparams& hyper);

private:
    struct PendingRecord {
        RecordToken token;
        std::uint64_t prior_version = 0;
        bool appended_slot = false;
        std::vector<SuffStats> prior_stats;
        std::vector<std::uint32_t> prior_free_slots;
        std::vector<Observation> observations;
    };

    CrossCatState() = default;
    void init(const DataTable& table, std::vector<BlockLayout> layout);
    void touch();
    std::uint32_t take_slot(Block& block);
    void release_slot(Block& block, std::uint32_t slot);
    void build_block_stats(Block& block, const DataTable& table) const;
    void require_no_pending(const char* op) const;

    std::size_t num_rows_ = 0;
    std::vector<std::size_t> column_to_block_;
    std::vector<Block> blocks_;
    double alpha0_ = 1.0;
    std::vector<Hyperparams> hypers_;
    std::vector<PendingRecord> pending_;
    std::uint64_t version_ = 0;
    std::uint64_t uid_ = 0;
};

/// CRP seating probabilities: sizes[i] / (n + alpha) for existing tables and
/// alpha / (n + alpha) for a new one (last entry).
std::vector<double> crp_weights(std::span<const std::size_t> cluster_sizes, double alpha);

/// log CRP(partition | alpha) given the block sizes of the partition.
double crp_log_probability(std::span<const std::size_t> cluster_sizes, double alpha);

/// Draws a partition of n items from CRP(alpha), labels 0..K-1.
std::vector<std::uint32_t> sample_crp_partition(std::size_t n, double alpha, Rng& rng);

/// A prior draw of the column partition and per-block row partitions, with
/// statistics populated from `table` and default hyperparameters.
CrossCatState prior_sample(const DataTable& table, double alpha0, double alpha1, Rng& rng);

/// Unnormalized log posterior: CRP(v) + sum_k CRP(z^k) + sum log marginals.
double log_joint_score(const CrossCatState& state);

void gibbs_row_sweep(CrossCatState& state, const DataTable& table, Rng& rng);
void gibbs_column_sweep(CrossCatState& state, const DataTable& table, Rng& rng);
void hyper_grid_gibbs(CrossCatState& state, const DataTable& table, Rng& rng);
void set_alpha0(CrossCatState& state, double alpha0);
void set_block_alpha(CrossCatState& state, std::size_t k, double alpha);
void set_hyperparams(CrossCatState& state, std::size_t col, const Hyperparams& hyper);

/// Number of grid points used by `hyper_grid_gibbs`.
inline constexpr std::size_t kHyperGridSize = 30;

/// n log-spaced points between lo and hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n = kHyperGridSize);

/// Grid used to resample the column CRP concentration.
std::vector<double> column_alpha_grid(std::size_t num_cols);
/// Grid used to resample a block's row CRP concentration.
std::vector<double> row_alpha_grid(std::size_t num_rows);
/// Grid for hyperparameter coordinate `index` of column `col`.
std::vector<double> hyper_grid(const DataTable& table, std::size_t col, const Hyperparams& hyper,
                               std::size_t index);

}  // namespace relquery
