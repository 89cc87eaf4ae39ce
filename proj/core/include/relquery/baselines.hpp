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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relquery/ensemble.hpp"
#include "relquery/relevance.hpp"
#include "relquery/table.hpp"

namespace relquery {

/// Dense per-row vectors over selected columns after imputation.
struct VectorView {
    std::vector<std::vector<double>> rows;
    /// Source columns, in selection order.
    std::vector<std::size_t> columns;
    /// One name per vector coordinate ("col" or "col=symbol" for one-hot).
    std::vector<std::string> features;
    bool standardized = false;
};

/// Fills missing numerical/count cells with the column median and discrete
/// cells with the modal code (lowest code on ties). Categorical columns are
/// one-hot expanded; with `standardize`, numerical and count coordinates are
/// z-scored after imputation. Throws SchemaError for a fully missing column.
VectorView impute_median(const DataTable& table, const std::vector<std::size_t>& columns, bool standardize = false);

/// The k columns with the highest dependence probability with `context`
/// (the context itself included), ties broken by column order.
std::vector<std::size_t> select_context_columns(const Ensemble& ensemble, std::size_t context, std::size_t k);

/// 0 when either vector is all zeros.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double euclidean_distance(std::span<const double> u, std::span<const double> v);
/// Sum |u-v| / sum (u+v); both vectors are shifted by the smallest entry
/// when any entry is negative. 0 when the denominator is 0.
double bray_curtis(std::span<const double> u, std::span<const double> v);

/// log p(x_r | x_Q) - log p(x_r) summed over the columns where r is present,
/// with default hyperparameters.
double log_bayes_sets_score(const DataTable& table, std::span<const RowId> query, RowId candidate);
double bayes_sets_score(const DataTable& table, std::span<const RowId> query, RowId candidate);

enum class Measure { relevance, cosine, euclidean, bray_curtis };

Measure parse_measure(std::string_view name);
std::string to_string(Measure measure);

/// Symmetric N x N similarity matrix with unit diagonal and a display order.
struct Heatmap {
    std::vector<std::vector<double>> matrix;
    std::vector<std::size_t> order;
    std::vector<std::string> labels;
};

/// Entry (i, j) = R_c({i}, j).
Heatmap relevance_heatmap(const Ensemble& ensemble, CoOccurrenceCache& cache, const DataTable& table,
                          std::size_t context);

/// Similarities in [0, 1]: cosine mapped through (1+x)/2 only when some
/// entry is negative; distances mapped through 1/(1+d).
Heatmap similarity_heatmap(const VectorView& view, Measure measure, std::vector<std::string> labels);

/// Leaf order of the single-linkage dendrogram over distance 1 - similarity.
std::vector<std::size_t> single_linkage_order(const std::vector<std::vector<double>>& similarity);

/// Fraction of off-diagonal entries strictly below `threshold`.
double fraction_below(const std::vector<std::vector<double>>& matrix, double threshold);

/// Reordered matrix with a header row and a label column.
void write_heatmap_csv(const Heatmap& heatmap, std::ostream& out);
/// Binary PPM (P6), `cell` pixels per entry, white (0) to dark blue (1).
void write_heatmap_ppm(const Heatmap& heatmap, std::ostream& out, std::size_t cell = 4);

}  // namespace relquery
