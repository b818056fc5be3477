#include "apptrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

namespace apptrack {

namespace {

constexpr double kBig = 1e30;  // sentinel for hard-disallowed cells in sub-solves

// Classic potentials (Kuhn-Munkres) solver on a dense square matrix.
// Entries must be finite. Returns row -> col plus the final dual potentials.
struct DenseSolution {
    std::vector<int> row_to_col;
    std::vector<double> u, v;
};

DenseSolution solve_dense(const std::vector<double>& a, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    DenseSolution sol;
    sol.row_to_col.assign(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j]) sol.row_to_col[p[j] - 1] = j - 1;
    }
    sol.u.assign(u.begin() + 1, u.end());
    sol.v.assign(v.begin() + 1, v.end());
    return sol;
}

}  // namespace

CostMatrix CostMatrix::sized(std::size_t n_rows, std::size_t n_cols, double fill) {
    CostMatrix m;
    m.rows.resize(n_rows);
    m.cols.resize(n_cols);
    std::iota(m.rows.begin(), m.rows.end(), std::size_t{0});
    std::iota(m.cols.begin(), m.cols.end(), std::size_t{0});
    m.cost.assign(n_rows * n_cols, fill);
    return m;
}

double cosine_distance(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("embedding dims differ: " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine distance of zero vector");
    const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(d, 0.0, 2.0);
}

Embedding aggregate_embedding(const std::vector<std::pair<Embedding, double>>& history) {
    if (history.empty()) throw EmptyHistory("aggregate of empty history");
    const std::size_t dim = history.front().first.dim();
    std::vector<double> sum(dim, 0.0);
    double score_sum = 0.0;
    for (const auto& [emb, score] : history) {
        if (emb.dim() != dim) {
            throw DimensionMismatch("history embedding dims differ");
        }
        for (std::size_t i = 0; i < dim; ++i) sum[i] += emb.values[i] * score;
        score_sum += score;
    }
    if (score_sum <= 0.0) throw ZeroScoreSum("all history scores are zero");
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        sum[i] /= score_sum;
        norm += sum[i] * sum[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) throw ZeroVector("aggregate embedding has zero norm");
    for (double& v : sum) v /= norm;
    return Embedding{std::move(sum)};
}

CostMatrix build_cost_matrix(const std::vector<const Tracklet*>& tracklets,
                             const std::vector<const Detection*>& detections,
                             double gate) {
    CostMatrix m = CostMatrix::sized(tracklets.size(), detections.size());
    for (std::size_t i = 0; i < tracklets.size(); ++i) {
        for (std::size_t j = 0; j < detections.size(); ++j) {
            if (tracklets[i]->category != detections[j]->category) continue;
            const double d = cosine_distance(tracklets[i]->aggregate,
                                             detections[j]->embedding);
            if (d <= gate) m.at(i, j) = d;
        }
    }
    return m;
}

CostMatrix build_cost_matrix(const std::vector<Tracklet>& tracklets,
                             const std::vector<Detection>& detections,
                             double gate) {
    std::vector<const Tracklet*> tp;
    std::vector<const Detection*> dp;
    tp.reserve(tracklets.size());
    dp.reserve(detections.size());
    for (const auto& t : tracklets) tp.push_back(&t);
    for (const auto& d : detections) dp.push_back(&d);
    return build_cost_matrix(tp, dp, gate);
}

Assignment hungarian_solve(const CostMatrix& m) {
    const int n = static_cast<int>(m.num_rows());
    const int mm = static_cast<int>(m.num_cols());
    Assignment out;
    if (n == 0 || mm == 0) return out;

    // Pad to square. Forbidden and padding ("escape") cells carry a sentinel
    // that dominates every possible sum of real entries, so the dense solver
    // maximizes the number of real pairs first and minimizes their total
    // cost second.
    const int s = std::max(n, mm);
    std::vector<double> padded(static_cast<std::size_t>(s) * s, 0.0);
    std::vector<char> is_real(static_cast<std::size_t>(s) * s, 0);
    double sentinel = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < mm; ++j) {
            const double c = m.at(i, j);
            if (std::isinf(c)) continue;
            padded[i * s + j] = c;
            is_real[i * s + j] = 1;
            sentinel += std::abs(c);
        }
    }
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            if (!is_real[i * s + j]) padded[i * s + j] = sentinel;
        }
    }

    // Canonical key of a pair set: cardinality, then the real costs summed
    // in increasing row order. Identical sets always produce bit-identical
    // keys, and with the sentinel dominating, optima of the padded problem
    // are exactly the pair sets with the optimal key.
    struct Key {
        std::size_t pairs;
        double cost;
        bool operator==(const Key& o) const {
            return pairs == o.pairs && cost == o.cost;
        }
    };
    auto canonical = [&](std::vector<std::pair<int, int>> pairs) {
        std::sort(pairs.begin(), pairs.end());
        double t = 0.0;
        for (const auto& [r, c] : pairs) t += padded[r * s + c];
        return Key{pairs.size(), t};
    };

    const DenseSolution sol0 = solve_dense(padded, s);

    // Witness: some optimal assignment consistent with every decision taken
    // so far. Starts as the initial solve, filtered to real cells.
    std::vector<int> witness(s, -1);
    for (int r = 0; r < s; ++r) {
        const int c = sol0.row_to_col[r];
        if (r < n && c < mm && is_real[r * s + c]) witness[r] = c;
    }
    auto witness_pairs = [&]() {
        std::vector<std::pair<int, int>> ps;
        for (int r = 0; r < s; ++r) {
            if (witness[r] >= 0) ps.emplace_back(r, witness[r]);
        }
        return ps;
    };
    const Key best = canonical(witness_pairs());

    std::vector<std::pair<int, int>> fixed;
    std::vector<char> col_used(s, 0);
    std::vector<char> row_done(s, 0);  // matched or committed unmatched

    // Optimal completion given the prefix plus a trial pair (r, c). Rows
    // already committed unmatched may only take escape cells. Returns the
    // completion's real pairs, or nullopt when infeasible.
    auto solve_completion =
        [&](int r, int c) -> std::optional<std::vector<std::pair<int, int>>> {
        std::vector<int> sub_rows, sub_cols;
        std::vector<char> row_fixed(s, 0);
        for (const auto& p : fixed) row_fixed[p.first] = 1;
        for (int rr = 0; rr < s; ++rr) {
            if (rr == r || row_fixed[rr]) continue;
            sub_rows.push_back(rr);
        }
        for (int cc = 0; cc < s; ++cc) {
            if (cc == c || col_used[cc]) continue;
            sub_cols.push_back(cc);
        }
        const int k = static_cast<int>(sub_rows.size());
        std::vector<double> sub(static_cast<std::size_t>(k) * k, 0.0);
        for (int i = 0; i < k; ++i) {
            const int rr = sub_rows[i];
            const bool escape_only = row_done[rr];  // committed unmatched earlier
            for (int j = 0; j < k; ++j) {
                const int cc = sub_cols[j];
                const bool real = is_real[rr * s + cc];
                if (real && escape_only) {
                    sub[i * k + j] = kBig;
                } else {
                    sub[i * k + j] = padded[rr * s + cc];
                }
            }
        }
        const DenseSolution sol = solve_dense(sub, k);
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < k; ++i) {
            const int j = sol.row_to_col[i];
            const int rr = sub_rows[i];
            const int cc = sub_cols[j];
            if (sub[i * k + j] >= kBig / 2) return std::nullopt;  // forced illegal cell
            if (is_real[rr * s + cc]) pairs.emplace_back(rr, cc);
        }
        return pairs;
    };

    for (int r = 0; r < n; ++r) {
        const bool witness_rest = std::any_of(
            witness.begin() + r, witness.end(), [](int c) { return c >= 0; });
        if (!witness_rest) break;  // all optimal pairs are already fixed

        int accepted = -1;
        for (int c = 0; c < mm; ++c) {
            if (col_used[c] || !is_real[r * s + c]) continue;
            if (witness[r] == c) {
                accepted = c;
                break;
            }
            // A cell in any optimum has zero reduced cost under optimal duals.
            const double rc = padded[r * s + c] - sol0.u[r] - sol0.v[c];
            if (rc > 1e-9) continue;
            auto completion = solve_completion(r, c);
            if (!completion) continue;
            auto trial = fixed;
            trial.emplace_back(r, c);
            trial.insert(trial.end(), completion->begin(), completion->end());
            if (canonical(trial) == best) {
                accepted = c;
                std::fill(witness.begin(), witness.end(), -1);
                for (const auto& p : fixed) witness[p.first] = p.second;
                witness[r] = c;
                for (const auto& p : *completion) witness[p.first] = p.second;
                break;
            }
        }
        if (accepted >= 0) {
            fixed.emplace_back(r, accepted);
            col_used[accepted] = 1;
            witness[r] = accepted;
        } else {
            witness[r] = -1;  // every optimum consistent with the prefix skips r
        }
        row_done[r] = 1;
    }

    out.pairs.reserve(fixed.size());
    for (const auto& [r, c] : fixed) {
        out.pairs.emplace_back(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
    out.total_cost = canonical(fixed).cost;
    return out;
}

}  // namespace apptrack
