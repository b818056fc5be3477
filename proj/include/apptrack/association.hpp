#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "apptrack/types.hpp"

namespace apptrack {

// Marks a pair that can never be assigned.
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

// Dense cost matrix over tracklet rows and detection columns. `rows` and
// `cols` carry caller-side indices so that callers building matrices over
// subsets can map assignment positions back.
struct CostMatrix {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    std::vector<double> cost;  // rows.size() * cols.size(), row-major

    std::size_t num_rows() const { return rows.size(); }
    std::size_t num_cols() const { return cols.size(); }
    double at(std::size_t r, std::size_t c) const { return cost[r * cols.size() + c]; }
    double& at(std::size_t r, std::size_t c) { return cost[r * cols.size() + c]; }

    static CostMatrix sized(std::size_t n_rows, std::size_t n_cols, double fill = kForbidden);
};

// Matching result. Pairs are matrix positions sorted by row; unmatched rows
// and columns simply do not appear.
struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double total_cost = 0.0;
};

// 1 - cos(a, b), in [0, 2]. Throws DimensionMismatch or ZeroVector.
double cosine_distance(const Embedding& a, const Embedding& b);

// Score-weighted mean of the history embeddings, L2-normalized.
// Throws EmptyHistory or ZeroScoreSum.
Embedding aggregate_embedding(const std::vector<std::pair<Embedding, double>>& history);

// Pairwise cosine distances between tracklet aggregates and detection
// embeddings, with cross-category pairs and pairs beyond `gate` forbidden.
// No box or motion term enters the cost.
CostMatrix build_cost_matrix(const std::vector<const Tracklet*>& tracklets,
                             const std::vector<const Detection*>& detections,
                             double gate);
CostMatrix build_cost_matrix(const std::vector<Tracklet>& tracklets,
                             const std::vector<Detection>& detections,
                             double gate);

// Optimal matching over the non-forbidden entries: maximum cardinality
// first, minimum total cost among those, and among equal-cost optima the
// lexicographically smallest pair list by (row, col). Rows and columns with
// no usable entry stay unmatched. Entries may be negative; only +infinity is
// treated as forbidden.
Assignment hungarian_solve(const CostMatrix& m);

}  // namespace apptrack
