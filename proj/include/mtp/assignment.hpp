#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mtp {

/// Rectangular cost matrix with per-cell gating. Cells start forbidden;
/// set() marks a cell allowed with a finite cost.
class CostMatrix {
  public:
    CostMatrix() = default;
    CostMatrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          cost_(static_cast<std::size_t>(rows) * cols, 0.0),
          allowed_(static_cast<std::size_t>(rows) * cols, 0) {
        if (rows < 0 || cols < 0)
            throw std::invalid_argument("CostMatrix: negative dimensions");
    }

    /// Dense construction: every cell allowed.
    explicit CostMatrix(const std::vector<std::vector<double>>& m)
        : CostMatrix(static_cast<int>(m.size()),
                     m.empty() ? 0 : static_cast<int>(m[0].size())) {
        for (int r = 0; r < rows_; ++r) {
            if (static_cast<int>(m[r].size()) != cols_)
                throw std::invalid_argument("CostMatrix: ragged rows");
            for (int c = 0; c < cols_; ++c) set(r, c, m[r][c]);
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    void set(int r, int c, double v) {
        if (!std::isfinite(v))
            throw std::invalid_argument("CostMatrix: cost must be finite");
        cost_[idx(r, c)] = v;
        allowed_[idx(r, c)] = 1;
    }
    void forbid(int r, int c) { allowed_[idx(r, c)] = 0; }
    bool is_allowed(int r, int c) const { return allowed_[idx(r, c)] != 0; }
    double at(int r, int c) const { return cost_[idx(r, c)]; }

  private:
    std::size_t idx(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw std::out_of_range("CostMatrix: index out of range");
        return static_cast<std::size_t>(r) * cols_ + c;
    }
    int rows_ = 0, cols_ = 0;
    std::vector<double> cost_;
    std::vector<std::uint8_t> allowed_;
};

/// One complete matching: matched (row, col) pairs sorted by row, plus the
/// rows and cols left unmatched.
struct Assignment {
    std::vector<std::pair<int, int>> matches;
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
    double total_cost = 0.0;

    bool same_matches(const Assignment& o) const { return matches == o.matches; }
};

namespace detail {

struct MatchingSolution {
    std::vector<int> col_of_row;  // -1 where unmatched
    int cardinality = 0;
    bool feasible = true;         // false only when forced pairs conflict
};

/// Extra constraints layered on top of a CostMatrix: pairs that must appear
/// in the solution and cells that must not.
struct AssignmentConstraints {
    std::vector<std::pair<int, int>> forced;     // sorted by row
    std::vector<std::pair<int, int>> forbidden;  // extra forbidden cells
};

inline bool cell_forbidden_extra(const AssignmentConstraints& k, int r, int c) {
    for (const auto& p : k.forbidden)
        if (p.first == r && p.second == c) return true;
    return false;
}

/// Minimum-cost maximum-cardinality matching over the non-forbidden cells,
/// honoring forced pairs. Successive shortest augmenting paths; each
/// augmentation adds the cheapest cardinality increase, so the final matching
/// is the minimum-cost one among maximum-cardinality matchings.
inline MatchingSolution solve_matching(const CostMatrix& m,
                                       const AssignmentConstraints& k = {}) {
    const int R = m.rows(), C = m.cols();
    MatchingSolution sol;
    sol.col_of_row.assign(R, -1);
    std::vector<int> row_of_col(C, -1);
    std::vector<char> row_locked(R, 0), col_locked(C, 0);

    for (const auto& [r, c] : k.forced) {
        if (r < 0 || r >= R || c < 0 || c >= C || !m.is_allowed(r, c) ||
            cell_forbidden_extra(k, r, c) || row_locked[r] || col_locked[c]) {
            sol.feasible = false;
            return sol;
        }
        sol.col_of_row[r] = c;
        row_of_col[c] = r;
        row_locked[r] = 1;
        col_locked[c] = 1;
        ++sol.cardinality;
    }

    const double inf = std::numeric_limits<double>::infinity();
    // Node ids: rows 0..R-1, cols R..R+C-1.
    const int N = R + C;
    std::vector<double> dist(N);
    std::vector<int> prev(N);
    std::vector<char> inq(N);

    auto allowed = [&](int r, int c) {
        return m.is_allowed(r, c) && !cell_forbidden_extra(k, r, c);
    };

    while (true) {
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(inq.begin(), inq.end(), 0);
        std::deque<int> q;
        for (int r = 0; r < R; ++r) {
            if (!row_locked[r] && sol.col_of_row[r] == -1) {
                dist[r] = 0.0;
                q.push_back(r);
                inq[r] = 1;
            }
        }
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            inq[u] = 0;
            if (u < R) {
                const int r = u;
                for (int c = 0; c < C; ++c) {
                    if (col_locked[c] || !allowed(r, c)) continue;
                    if (sol.col_of_row[r] == c) continue;
                    const double nd = dist[u] + m.at(r, c);
                    if (nd < dist[R + c]) {
                        dist[R + c] = nd;
                        prev[R + c] = u;
                        if (!inq[R + c]) {
                            q.push_back(R + c);
                            inq[R + c] = 1;
                        }
                    }
                }
            } else {
                const int c = u - R;
                const int r = row_of_col[c];
                if (r >= 0 && !row_locked[r]) {
                    const double nd = dist[u] - m.at(r, c);
                    if (nd < dist[r]) {
                        dist[r] = nd;
                        prev[r] = u;
                        if (!inq[r]) {
                            q.push_back(r);
                            inq[r] = 1;
                        }
                    }
                }
            }
        }
        // Cheapest reachable free column.
        int best_c = -1;
        for (int c = 0; c < C; ++c) {
            if (col_locked[c] || row_of_col[c] != -1) continue;
            if (dist[R + c] == inf) continue;
            if (best_c == -1 || dist[R + c] < dist[R + best_c]) best_c = c;
        }
        if (best_c == -1) break;
        // Augment: flip row->col edges along the path back to a free row.
        int v = R + best_c;
        while (v != -1) {
            const int r = prev[v];
            const int prev_col = prev[r];
            sol.col_of_row[r] = v - R;
            row_of_col[v - R] = r;
            v = prev_col;
        }
        ++sol.cardinality;
    }
    return sol;
}

inline Assignment make_assignment(const CostMatrix& m,
                                  const MatchingSolution& sol) {
    Assignment a;
    const int R = m.rows(), C = m.cols();
    std::vector<char> col_used(C, 0);
    for (int r = 0; r < R; ++r) {
        const int c = sol.col_of_row[r];
        if (c >= 0) {
            a.matches.emplace_back(r, c);
            col_used[c] = 1;
        } else {
            a.unmatched_rows.push_back(r);
        }
    }
    for (int c = 0; c < C; ++c)
        if (!col_used[c]) a.unmatched_cols.push_back(c);
    // Canonical cost: sum in row order, so identical match-sets always carry
    // bit-identical totals.
    a.total_cost = 0.0;
    for (const auto& [r, c] : a.matches) a.total_cost += m.at(r, c);
    return a;
}

}  // namespace detail

/// Minimum-cost maximum-cardinality matching. Among cost ties, returns the
/// lexicographically smallest match-set (lowest row, then lowest col).
inline Assignment hungarian(const CostMatrix& m) {
    using namespace detail;
    const MatchingSolution base = solve_matching(m);
    Assignment best = make_assignment(m, base);
    const int target_card = base.cardinality;
    const double target_cost = best.total_cost;
    const double eps = 1e-9 * (1.0 + std::abs(target_cost));

    // Lexicographic refinement: fix rows top-down to the smallest column that
    // still admits an optimal completion.
    AssignmentConstraints k;
    std::vector<char> col_used(static_cast<std::size_t>(m.cols()), 0);
    double fixed_cost = 0.0;
    int fixed_card = 0;
    std::vector<int> col_of_row(static_cast<std::size_t>(m.rows()), -1);
    for (int r = 0; r < m.rows(); ++r) {
        int chosen = -1;
        for (int c = 0; c < m.cols(); ++c) {
            if (col_used[c] || !m.is_allowed(r, c)) continue;
            k.forced.emplace_back(r, c);
            const MatchingSolution s = solve_matching(m, k);
            k.forced.pop_back();
            if (!s.feasible || s.cardinality != target_card) continue;
            Assignment full = make_assignment(m, s);
            if (full.total_cost <= target_cost + eps) {
                chosen = c;
                break;
            }
        }
        if (chosen >= 0) {
            k.forced.emplace_back(r, chosen);
            col_used[chosen] = 1;
            col_of_row[r] = chosen;
            fixed_cost += m.at(r, chosen);
            ++fixed_card;
        }
        if (fixed_card == target_card) break;
    }
    MatchingSolution final_sol;
    final_sol.col_of_row = col_of_row;
    final_sol.cardinality = fixed_card;
    return make_assignment(m, final_sol);
}

/// Ranked H-best assignments by solution-space partitioning. Returns up to
/// h distinct maximum-cardinality matchings in non-decreasing cost order;
/// equal-cost ties are ordered by lexicographic match-set. Element 0 equals
/// hungarian(m).
inline std::vector<Assignment> murty_h_best(const CostMatrix& m, int h) {
    using namespace detail;
    if (h < 1) throw std::invalid_argument("murty_h_best: h must be >= 1");

    struct Node {
        AssignmentConstraints constraints;
        Assignment solution;
    };
    const MatchingSolution root = solve_matching(m);
    const int target_card = root.cardinality;

    auto node_less = [](const Node& a, const Node& b) {
        if (a.solution.total_cost != b.solution.total_cost)
            return a.solution.total_cost < b.solution.total_cost;
        return a.solution.matches < b.solution.matches;
    };
    // std::priority_queue is a max-heap; invert.
    auto heap_cmp = [&](const Node& a, const Node& b) { return node_less(b, a); };
    std::priority_queue<Node, std::vector<Node>, decltype(heap_cmp)> queue(heap_cmp);
    queue.push(Node{{}, make_assignment(m, root)});

    std::vector<Assignment> out;
    auto tie_eps = [](double c) { return 1e-9 * (1.0 + std::abs(c)); };
    while (!queue.empty()) {
        if (static_cast<int>(out.size()) >= h &&
            queue.top().solution.total_cost >
                out.back().total_cost + tie_eps(out.back().total_cost))
            break;
        Node node = queue.top();
        queue.pop();
        out.push_back(node.solution);

        // Partition: the i-th child forbids the i-th free match and forces
        // all earlier ones, giving disjoint solution subspaces.
        std::vector<std::pair<int, int>> free_matches;
        for (const auto& p : node.solution.matches) {
            if (std::find(node.constraints.forced.begin(),
                          node.constraints.forced.end(),
                          p) == node.constraints.forced.end())
                free_matches.push_back(p);
        }
        AssignmentConstraints child = node.constraints;
        for (const auto& p : free_matches) {
            child.forbidden.push_back(p);
            const MatchingSolution s = solve_matching(m, child);
            if (s.feasible && s.cardinality == target_card)
                queue.push(Node{child, make_assignment(m, s)});
            child.forbidden.pop_back();
            child.forced.push_back(p);
        }
    }
    // Equal-cost groups were fully drained above; a final sort fixes their
    // relative order, then truncate to h.
    std::stable_sort(out.begin(), out.end(),
                     [](const Assignment& a, const Assignment& b) {
                         if (a.total_cost != b.total_cost)
                             return a.total_cost < b.total_cost;
                         return a.matches < b.matches;
                     });
    if (static_cast<int>(out.size()) > h) out.resize(h);
    return out;
}

}  // namespace mtp
