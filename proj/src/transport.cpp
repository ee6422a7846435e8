#include "ssldro/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ssldro/rng.hpp"

namespace ssldro {

CostValue cost(const SupportPoint& u, const SupportPoint& v, const TransportCost& tc) {
    if (u.x.size() != v.x.size()) throw data_error("cost: dimension mismatch");
    if (!(tc.q >= 1.0)) throw config_error("cost: norm order q must be >= 1");
    if (!(tc.rho >= 1.0)) throw config_error("cost: exponent rho must be >= 1");
    if (u.y != v.y) return CostValue::infinite();
    vec diff(u.x.size());
    for (std::size_t i = 0; i < u.x.size(); ++i) diff[i] = u.x[i] - v.x[i];
    const double base = norm_q(diff, tc.q);
    return CostValue::finite(tc.rho == 1.0 ? base : std::pow(base, tc.rho));
}

namespace {

struct Cell {
    std::size_t i, j;
    double mass;
};

// Solve potentials u, v with u[0] = 0 by walking the basis spanning tree.
void compute_potentials(const std::vector<Cell>& basis, std::size_t m, std::size_t n,
                        const std::vector<std::vector<double>>& C,
                        std::vector<double>& u, std::vector<double>& v) {
    std::vector<std::vector<std::size_t>> row_cells(m), col_cells(n);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        row_cells[basis[k].i].push_back(k);
        col_cells[basis[k].j].push_back(k);
    }
    std::vector<char> row_done(m, 0), col_done(n, 0);
    u.assign(m, 0.0);
    v.assign(n, 0.0);
    std::vector<std::size_t> stack = {0}; // row nodes first; rows are 0..m-1, cols m..m+n-1
    row_done[0] = 1;
    while (!stack.empty()) {
        const std::size_t node = stack.back();
        stack.pop_back();
        if (node < m) {
            for (std::size_t k : row_cells[node]) {
                const Cell& c = basis[k];
                if (!col_done[c.j]) {
                    v[c.j] = C[c.i][c.j] - u[c.i];
                    col_done[c.j] = 1;
                    stack.push_back(m + c.j);
                }
            }
        } else {
            const std::size_t j = node - m;
            for (std::size_t k : col_cells[j]) {
                const Cell& c = basis[k];
                if (!row_done[c.i]) {
                    u[c.i] = C[c.i][c.j] - v[c.j];
                    row_done[c.i] = 1;
                    stack.push_back(c.i);
                }
            }
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        if (!row_done[i]) throw numeric_error("transportation simplex: basis is not a spanning tree");
    for (std::size_t j = 0; j < n; ++j)
        if (!col_done[j]) throw numeric_error("transportation simplex: basis is not a spanning tree");
}

// Unique tree path from row i0 to column j0, returned as basis-cell indices.
std::vector<std::size_t> tree_path(const std::vector<Cell>& basis, std::size_t m, std::size_t n,
                                   std::size_t i0, std::size_t j0) {
    std::vector<std::vector<std::size_t>> adj(m + n);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        adj[basis[k].i].push_back(k);
        adj[m + basis[k].j].push_back(k);
    }
    std::vector<std::size_t> parent_edge(m + n, SIZE_MAX);
    std::vector<char> seen(m + n, 0);
    std::vector<std::size_t> queue = {i0};
    seen[i0] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t node = queue[head];
        if (node == m + j0) break;
        for (std::size_t k : adj[node]) {
            const std::size_t other = (node < m) ? m + basis[k].j : basis[k].i;
            if (!seen[other]) {
                seen[other] = 1;
                parent_edge[other] = k;
                queue.push_back(other);
            }
        }
    }
    if (!seen[m + j0]) throw numeric_error("transportation simplex: disconnected basis");
    std::vector<std::size_t> path;
    std::size_t node = m + j0;
    while (node != i0) {
        const std::size_t k = parent_edge[node];
        path.push_back(k);
        node = (node < m) ? m + basis[k].j : basis[k].i;
    }
    return path; // from j0 back to i0; alternates col-row-col-...
}

} // namespace

TransportSolution solve_transportation(const std::vector<double>& a,
                                       const std::vector<double>& b,
                                       const std::vector<std::vector<double>>& C) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0 || n == 0) throw config_error("solve_transportation: empty side");
    if (C.size() != m) throw config_error("solve_transportation: cost matrix row count mismatch");
    double sum_a = 0.0, sum_b = 0.0, cost_scale = 0.0;
    for (double x : a) {
        if (!(x >= 0.0)) throw config_error("solve_transportation: negative supply");
        sum_a += x;
    }
    for (double x : b) {
        if (!(x >= 0.0)) throw config_error("solve_transportation: negative demand");
        sum_b += x;
    }
    if (!(sum_a > 0.0)) throw config_error("solve_transportation: zero total mass");
    if (std::fabs(sum_a - sum_b) > 1e-9 * std::max(1.0, sum_a))
        throw numeric_error("solve_transportation: supply and demand totals differ");
    for (std::size_t i = 0; i < m; ++i) {
        if (C[i].size() != n) throw config_error("solve_transportation: ragged cost matrix");
        for (double c : C[i]) {
            if (!std::isfinite(c)) throw config_error("solve_transportation: non-finite cost");
            cost_scale = std::max(cost_scale, std::fabs(c));
        }
    }
    // Rescale demands so the totals match exactly; removes 1e-9 drift.
    std::vector<double> demand(b);
    const double fix = sum_a / sum_b;
    for (double& x : demand) x *= fix;

    // Northwest-corner initial basis: exactly m+n-1 cells, spanning tree.
    std::vector<Cell> basis;
    basis.reserve(m + n - 1);
    {
        std::size_t i = 0, j = 0;
        double ra = a[0], cb = demand[0];
        for (;;) {
            const double t = std::min(ra, cb);
            basis.push_back({i, j, t});
            ra -= t;
            cb -= t;
            if (i == m - 1 && j == n - 1) break;
            if (i < m - 1 && (ra <= cb || j == n - 1)) {
                ++i;
                ra = a[i];
            } else {
                ++j;
                cb = demand[j];
            }
        }
    }

    std::vector<std::vector<char>> in_basis(m, std::vector<char>(n, 0));
    for (const Cell& c : basis) in_basis[c.i][c.j] = 1;

    const double tol = 1e-11 * (1.0 + cost_scale);
    const std::size_t iter_cap = 200000;
    bool bland = false;
    int degenerate_streak = 0;
    std::vector<double> u, v;

    for (std::size_t iter = 0; iter < iter_cap; ++iter) {
        compute_potentials(basis, m, n, C, u, v);

        // Entering cell: most negative reduced cost (Dantzig), or the first
        // one in lexicographic order once anti-cycling kicks in (Bland).
        std::size_t ei = SIZE_MAX, ej = SIZE_MAX;
        double best = -tol;
        bool settled = false;
        for (std::size_t i = 0; i < m && !settled; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (in_basis[i][j]) continue;
                const double r = C[i][j] - u[i] - v[j];
                if (r < best) {
                    best = r;
                    ei = i;
                    ej = j;
                    if (bland) {
                        settled = true;
                        break;
                    }
                }
            }
        }
        if (ei == SIZE_MAX) break; // optimal

        const std::vector<std::size_t> path = tree_path(basis, m, n, ei, ej);
        // Cycle = entering edge (+) then the path from col ej back to row ei,
        // whose edges alternate -, +, -, ... starting with -.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leaving = SIZE_MAX;
        for (std::size_t p = 0; p < path.size(); p += 2) {
            if (basis[path[p]].mass < theta) {
                theta = basis[path[p]].mass;
                leaving = path[p];
            }
        }
        if (leaving == SIZE_MAX) throw numeric_error("transportation simplex: no leaving cell");
        for (std::size_t p = 0; p < path.size(); ++p) {
            basis[path[p]].mass += (p % 2 == 0) ? -theta : theta;
            if (basis[path[p]].mass < 0.0) basis[path[p]].mass = 0.0;
        }
        in_basis[basis[leaving].i][basis[leaving].j] = 0;
        in_basis[ei][ej] = 1;
        basis[leaving] = {ei, ej, theta};

        if (theta <= 1e-15) {
            if (++degenerate_streak > 30) bland = true;
        } else {
            degenerate_streak = 0;
        }
        if (iter + 1 == iter_cap)
            throw numeric_error("transportation simplex: iteration cap reached");
    }

    TransportSolution solution;
    for (const Cell& c : basis) {
        solution.value += C[c.i][c.j] * c.mass;
        if (c.mass > 0.0) solution.plan.entries.push_back({c.i, c.j, c.mass});
    }
    return solution;
}

CostValue discrepancy(const std::vector<double>& P,
                      const std::vector<double>& Q,
                      const SupportSet& support,
                      const TransportCost& tc) {
    const std::size_t size = support.size();
    if (P.size() != size || Q.size() != size)
        throw data_error("discrepancy: mass vector length does not match the support");
    double sum_p = 0.0, sum_q = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
        if (P[k] < -1e-12 || Q[k] < -1e-12) throw data_error("discrepancy: negative mass");
        sum_p += P[k];
        sum_q += Q[k];
    }
    if (std::fabs(sum_p - 1.0) > 1e-9 || std::fabs(sum_q - 1.0) > 1e-9)
        throw data_error("discrepancy: distributions must sum to 1");

    // Mass can only move within a label class (flips cost +inf), so the LP
    // decomposes by label and is feasible iff the per-label totals agree.
    std::map<double, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t k = 0; k < size; ++k) {
        auto& g = groups[support.points[k].y];
        if (P[k] > 0.0) g.first.push_back(k);
        if (Q[k] > 0.0) g.second.push_back(k);
    }
    double total = 0.0;
    for (const auto& [label, group] : groups) {
        (void)label;
        const auto& src = group.first;
        const auto& dst = group.second;
        double mass_p = 0.0, mass_q = 0.0;
        for (std::size_t k : src) mass_p += P[k];
        for (std::size_t k : dst) mass_q += Q[k];
        if (std::fabs(mass_p - mass_q) > 1e-9) return CostValue::infinite();
        if (mass_p <= 0.0 && mass_q <= 0.0) continue;
        if (src.empty() || dst.empty()) return CostValue::infinite();
        std::vector<double> a, b;
        for (std::size_t k : src) a.push_back(P[k]);
        for (std::size_t k : dst) b.push_back(Q[k]);
        std::vector<std::vector<double>> C(src.size(), std::vector<double>(dst.size()));
        for (std::size_t i = 0; i < src.size(); ++i)
            for (std::size_t j = 0; j < dst.size(); ++j)
                C[i][j] = cost(support.points[src[i]], support.points[dst[j]], tc).value();
        total += solve_transportation(a, b, C).value;
    }
    return CostValue::finite(total);
}

MetricReport metric_check(const TransportCost& tc, std::uint64_t seed, int num_triples) {
    rng_engine rng(seed);
    // Small random support with both labels present.
    const std::size_t per_label = 3, d = 2;
    SupportSet support;
    support.n_labeled = 2 * per_label;
    for (int side = 0; side < 2; ++side) {
        for (std::size_t k = 0; k < per_label; ++k) {
            SupportPoint p;
            p.y = side == 0 ? 1.0 : -1.0;
            for (std::size_t c = 0; c < d; ++c) p.x.push_back(2.0 * uniform01(rng) - 1.0);
            support.points.push_back(std::move(p));
        }
    }
    // Random distributions with per-label mass pinned to 1/2 so that every
    // pairwise discrepancy is finite.
    auto random_distribution = [&]() {
        std::vector<double> mass(support.size());
        for (int side = 0; side < 2; ++side) {
            double sum = 0.0;
            for (std::size_t k = 0; k < per_label; ++k) {
                const double w = -std::log1p(-uniform01(rng));
                mass[side * per_label + k] = w;
                sum += w;
            }
            for (std::size_t k = 0; k < per_label; ++k) mass[side * per_label + k] *= 0.5 / sum;
        }
        return mass;
    };
    auto root_cost = [&](const std::vector<double>& A, const std::vector<double>& B) {
        return std::pow(discrepancy(A, B, support, tc).value(), 1.0 / tc.rho);
    };

    MetricReport report;
    for (int t = 0; t < num_triples; ++t) {
        const auto P = random_distribution();
        const auto Q = random_distribution();
        const auto R = random_distribution();
        const double pq = root_cost(P, Q), qp = root_cost(Q, P);
        const double qr = root_cost(Q, R), pr = root_cost(P, R);
        report.max_symmetry_gap = std::max(report.max_symmetry_gap, std::fabs(pq - qp));
        report.max_triangle_violation = std::max(report.max_triangle_violation, pr - (pq + qr));
        report.max_identity_gap = std::max(report.max_identity_gap, root_cost(P, P));
        ++report.triples_checked;
    }
    return report;
}

} // namespace ssldro
