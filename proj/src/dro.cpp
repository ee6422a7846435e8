#include "ssldro/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssldro {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_iterate(const DualIterate& iterate) {
    if (!(iterate.lambda >= 0.0)) throw config_error("dual iterate: lambda must be >= 0");
}

SupportPoint as_point(const vec& x, double y) {
    return SupportPoint{x, y, Provenance::labeled};
}

// Score of atom u against sample (x,y): loss(u) - lambda * c(u,(x,y)), or
// -inf when the transport cost is infinite (label flip).  The margin is
// kept so gradient loops can turn it into grad-of-loss without a second
// dot product per atom.
struct ScoredAtom {
    std::size_t index;
    double margin;
    double loss_value;
    double cost_value;
    double score;
};

// Collects the finite-cost atoms; returns the max score (-inf if none).
double score_atoms(const SupportSet& support, const SupportPoint& sample,
                   const DualIterate& iterate, const TransportCost& tc,
                   const LossModel& model, std::vector<ScoredAtom>& out) {
    out.clear();
    if (support.dimension() != iterate.beta.size())
        throw data_error("dual objective: beta dimension does not match the support");
    if (model.dimension != 0 && model.dimension != iterate.beta.size())
        throw data_error("dual objective: input dimension does not match the model");
    double best = kNegInf;
    for (std::size_t k = 0; k < support.size(); ++k) {
        const SupportPoint& u = support.points[k];
        const CostValue c = cost(u, sample, tc);
        if (c.is_infinite()) continue;
        const double margin = dot(iterate.beta, u.x);
        const double l = loss_from_margin(model, margin, u.y);
        const double s = l - iterate.lambda * c.value();
        out.push_back({k, margin, l, c.value(), s});
        if (s > best) best = s;
    }
    return best;
}

} // namespace

double default_epsilon(std::size_t support_size) {
    if (support_size < 3) return 1.0;
    return std::max(1e-4, 1.0 / std::log(static_cast<double>(support_size)));
}

double phi(const SupportSet& support, const vec& x, double y,
           const DualIterate& iterate, double delta_star,
           const TransportCost& tc, const LossModel& model) {
    check_iterate(iterate);
    const SupportPoint sample = as_point(x, y);
    double best = kNegInf;
    for (const SupportPoint& u : support.points) {
        const CostValue c = cost(u, sample, tc);
        if (c.is_infinite()) continue;
        const double s = loss(model, u.x, u.y, iterate.beta) - iterate.lambda * c.value();
        if (s > best) best = s;
    }
    if (best == kNegInf) throw data_error("phi: no finite-cost support atom for this sample");
    return iterate.lambda * delta_star + best;
}

double phi_eps(const SupportSet& support, const vec& x, double y,
               const DualIterate& iterate, const SmoothingConfig& config,
               const TransportCost& tc, const LossModel& model) {
    check_iterate(iterate);
    if (!(config.epsilon > 0.0)) throw config_error("phi_eps: epsilon must be > 0");
    std::vector<ScoredAtom> atoms;
    const double m = score_atoms(support, as_point(x, y), iterate, tc, model, atoms);
    if (atoms.empty()) throw data_error("phi_eps: no finite-cost support atom for this sample");
    double sum = 0.0;
    for (const ScoredAtom& a : atoms) sum += std::exp((a.score - m) / config.epsilon);
    return iterate.lambda * config.delta_star + m + config.epsilon * std::log(sum);
}

PhiGradient grad_phi_eps(const SupportSet& support, const vec& x, double y,
                         const DualIterate& iterate, const SmoothingConfig& config,
                         const TransportCost& tc, const LossModel& model) {
    check_iterate(iterate);
    if (!(config.epsilon > 0.0)) throw config_error("grad_phi_eps: epsilon must be > 0");
    std::vector<ScoredAtom> atoms;
    const double m = score_atoms(support, as_point(x, y), iterate, tc, model, atoms);
    if (atoms.empty()) throw data_error("grad_phi_eps: no finite-cost support atom for this sample");

    PhiGradient out;
    out.dbeta.assign(iterate.beta.size(), 0.0);
    double weight_sum = 0.0, cost_sum = 0.0;
    for (const ScoredAtom& a : atoms) {
        const double w = std::exp((a.score - m) / config.epsilon);
        if (w == 0.0) continue;
        weight_sum += w;
        cost_sum += w * a.cost_value;
        const SupportPoint& u = support.points[a.index];
        axpy(w * grad_scale_from_margin(model, a.margin, u.y), u.x, out.dbeta);
    }
    scale(out.dbeta, 1.0 / weight_sum);
    out.dlambda = config.delta_star - cost_sum / weight_sum;
    return out;
}

double lambda_curvature_phi_eps(const SupportSet& support, const vec& x, double y,
                                const DualIterate& iterate, const SmoothingConfig& config,
                                const TransportCost& tc, const LossModel& model) {
    check_iterate(iterate);
    if (!(config.epsilon > 0.0))
        throw config_error("lambda_curvature_phi_eps: epsilon must be > 0");
    std::vector<ScoredAtom> atoms;
    const double m = score_atoms(support, as_point(x, y), iterate, tc, model, atoms);
    if (atoms.empty())
        throw data_error("lambda_curvature_phi_eps: no finite-cost support atom for this sample");
    double weight_sum = 0.0, cost_sum = 0.0;
    for (const ScoredAtom& a : atoms) {
        const double w = std::exp((a.score - m) / config.epsilon);
        weight_sum += w;
        cost_sum += w * a.cost_value;
    }
    // Two-pass variance: the single-pass E[c^2] - E[c]^2 cancels badly when
    // the weights concentrate, which is exactly the regime that matters here.
    const double mean_cost = cost_sum / weight_sum;
    double var_sum = 0.0;
    for (const ScoredAtom& a : atoms) {
        const double w = std::exp((a.score - m) / config.epsilon);
        const double centered = a.cost_value - mean_cost;
        var_sum += w * centered * centered;
    }
    return var_sum / weight_sum / config.epsilon;
}

double empirical_risk(const SupportSet& support, const vec& beta, const LossModel& model) {
    if (support.n_labeled == 0) throw data_error("empirical_risk: no labeled atoms");
    double sum = 0.0;
    for (std::size_t v = 0; v < support.n_labeled; ++v)
        sum += loss(model, support.points[v].x, support.points[v].y, beta);
    return sum / static_cast<double>(support.n_labeled);
}

double expected_phi(const SupportSet& support, const DualIterate& iterate, double delta_star,
                    const TransportCost& tc, const LossModel& model) {
    if (support.n_labeled == 0) throw data_error("expected_phi: no labeled atoms");
    double sum = 0.0;
    for (std::size_t v = 0; v < support.n_labeled; ++v)
        sum += phi(support, support.points[v].x, support.points[v].y, iterate, delta_star, tc, model);
    return sum / static_cast<double>(support.n_labeled);
}

double expected_phi_eps(const SupportSet& support, const DualIterate& iterate,
                        const SmoothingConfig& config, const TransportCost& tc,
                        const LossModel& model) {
    if (support.n_labeled == 0) throw data_error("expected_phi_eps: no labeled atoms");
    double sum = 0.0;
    for (std::size_t v = 0; v < support.n_labeled; ++v)
        sum += phi_eps(support, support.points[v].x, support.points[v].y, iterate, config, tc, model);
    return sum / static_cast<double>(support.n_labeled);
}

double expected_lambda_curvature(const SupportSet& support, const DualIterate& iterate,
                                 const SmoothingConfig& config, const TransportCost& tc,
                                 const LossModel& model) {
    if (support.n_labeled == 0) throw data_error("expected_lambda_curvature: no labeled atoms");
    double sum = 0.0;
    for (std::size_t v = 0; v < support.n_labeled; ++v)
        sum += lambda_curvature_phi_eps(support, support.points[v].x, support.points[v].y,
                                        iterate, config, tc, model);
    return sum / static_cast<double>(support.n_labeled);
}

PhiGradient expected_grad_phi_eps(const SupportSet& support, const DualIterate& iterate,
                                  const SmoothingConfig& config, const TransportCost& tc,
                                  const LossModel& model) {
    if (support.n_labeled == 0) throw data_error("expected_grad_phi_eps: no labeled atoms");
    PhiGradient total;
    total.dbeta.assign(iterate.beta.size(), 0.0);
    for (std::size_t v = 0; v < support.n_labeled; ++v) {
        const PhiGradient g = grad_phi_eps(support, support.points[v].x, support.points[v].y,
                                           iterate, config, tc, model);
        axpy(1.0, g.dbeta, total.dbeta);
        total.dlambda += g.dlambda;
    }
    const double inv_n = 1.0 / static_cast<double>(support.n_labeled);
    scale(total.dbeta, inv_n);
    total.dlambda *= inv_n;
    return total;
}

// ---------------------------------------------------------------------------
// Exact inner maximization: revised primal simplex on the transportation-with-
// budget LP.  Every column has at most two nonzeros (a unit entry in one
// labeled row plus the cost coefficient in the budget row), so pricing is
// O(1) per column and one iteration costs O(#vars + m^2).
// ---------------------------------------------------------------------------

WorstCaseDistribution inner_max_exact(const SupportSet& support, const vec& beta,
                                      double delta_star, const TransportCost& tc,
                                      const LossModel& model) {
    const std::size_t n = support.n_labeled;
    const std::size_t K = support.size();
    if (n == 0) throw data_error("inner_max_exact: no labeled atoms");
    if (!(delta_star >= 0.0)) throw config_error("inner_max_exact: delta must be >= 0");
    if (K * n > 10000)
        throw config_error("inner_max_exact: instance exceeds the 10^4-variable cap");

    // Column data.  Pair variables first (finite-cost (u,v) pairs), slack last.
    struct Column {
        std::size_t u, v;   // support atom, labeled atom
        double gamma;       // cost coefficient in the budget row
        double obj;         // loss(u)
    };
    std::vector<Column> cols;
    std::vector<double> atom_loss(K);
    double obj_scale = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        atom_loss[k] = loss(model, support.points[k].x, support.points[k].y, beta);
        obj_scale = std::max(obj_scale, std::fabs(atom_loss[k]));
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t k = 0; k < K; ++k) {
            const CostValue c = cost(support.points[k], support.points[v], tc);
            if (c.is_infinite()) continue;
            cols.push_back({k, v, c.value(), atom_loss[k]});
        }
    }
    const std::size_t slack_id = cols.size();
    const std::size_t m = n + 1;          // labeled rows 0..n-1, budget row n

    // Locate the self pair (v,v) for each labeled row; it starts the basis.
    std::vector<std::size_t> self_col(n, SIZE_MAX);
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (cols[j].u == cols[j].v) self_col[cols[j].v] = j;
    for (std::size_t v = 0; v < n; ++v)
        if (self_col[v] == SIZE_MAX)
            throw numeric_error("inner_max_exact: missing self pair in support");

    std::vector<std::size_t> basis(m);
    for (std::size_t v = 0; v < n; ++v) basis[v] = self_col[v];
    basis[n] = slack_id;
    std::vector<double> Binv(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) Binv[r * m + r] = 1.0;
    std::vector<double> xB(m, 1.0 / static_cast<double>(n));
    xB[n] = delta_star;

    auto column_obj = [&](std::size_t j) { return j == slack_id ? 0.0 : cols[j].obj; };
    const double tol = 1e-10 * (1.0 + obj_scale);
    bool bland = false;
    int degenerate_streak = 0;
    std::vector<double> y(m), d(m);
    const std::size_t iter_cap = 100000;

    for (std::size_t iter = 0;; ++iter) {
        if (iter >= iter_cap) throw numeric_error("inner_max_exact: simplex iteration cap reached");

        // y = c_B^T B^{-1}
        for (std::size_t k = 0; k < m; ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += column_obj(basis[r]) * Binv[r * m + k];
            y[k] = s;
        }

        // Price: entering column with positive reduced cost (maximization).
        std::size_t enter = SIZE_MAX;
        double best = tol;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double r = cols[j].obj - y[cols[j].v] - y[n] * cols[j].gamma;
            if (r > best) {
                best = r;
                enter = j;
                if (bland) break;
            }
        }
        if (enter == SIZE_MAX) {
            const double r_slack = -y[n];
            if (r_slack > tol) enter = slack_id;
        }
        if (enter == SIZE_MAX) break; // optimal

        // d = B^{-1} a_enter
        if (enter == slack_id) {
            for (std::size_t r = 0; r < m; ++r) d[r] = Binv[r * m + n];
        } else {
            const Column& c = cols[enter];
            for (std::size_t r = 0; r < m; ++r)
                d[r] = Binv[r * m + c.v] + c.gamma * Binv[r * m + n];
        }

        // Ratio test.
        std::size_t leave = SIZE_MAX;
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            if (d[r] > 1e-11) {
                const double ratio = xB[r] / d[r];
                if (ratio < theta - 1e-15 ||
                    (ratio < theta + 1e-15 && leave != SIZE_MAX &&
                     (bland ? basis[r] < basis[leave] : r < leave))) {
                    theta = ratio;
                    leave = r;
                }
            }
        }
        if (leave == SIZE_MAX)
            throw numeric_error("inner_max_exact: unbounded direction (numerical breakdown)");

        // Pivot: update B^{-1} and the basic values.
        const double piv = d[leave];
        for (std::size_t k = 0; k < m; ++k) Binv[leave * m + k] /= piv;
        const double theta_exact = xB[leave] / piv;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == leave || d[r] == 0.0) continue;
            const double f = d[r];
            for (std::size_t k = 0; k < m; ++k) Binv[r * m + k] -= f * Binv[leave * m + k];
            xB[r] -= f * theta_exact;
            if (xB[r] < 0.0) xB[r] = 0.0;
        }
        xB[leave] = theta_exact;
        basis[leave] = enter;

        if (theta_exact <= 1e-13) {
            if (++degenerate_streak > 40) bland = true;
        } else {
            degenerate_streak = 0;
        }
    }

    WorstCaseDistribution result;
    result.marginal.assign(K, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] == slack_id || xB[r] <= 0.0) continue;
        const Column& c = cols[basis[r]];
        result.plan.entries.push_back({c.u, c.v, xB[r]});
        result.marginal[c.u] += xB[r];
        result.value += c.obj * xB[r];
        result.budget_used += c.gamma * xB[r];
    }

    // Guard against accumulated B^{-1} drift before anyone trusts the plan.
    std::vector<double> col_sum(n, 0.0);
    for (const PlanEntry& e : result.plan.entries) col_sum[e.target] += e.mass;
    for (std::size_t v = 0; v < n; ++v)
        if (std::fabs(col_sum[v] - 1.0 / static_cast<double>(n)) > 1e-9)
            throw numeric_error("inner_max_exact: column-sum residual exceeds 1e-9");
    if (result.budget_used > delta_star + 1e-9)
        throw numeric_error("inner_max_exact: budget constraint violated at optimum");
    return result;
}

// ---------------------------------------------------------------------------
// Scalar dual: bracket the minimizer of the convex map lambda -> E_Pn[phi]
// by doubling, then golden-section.  A plateau (the delta=0 asymptote) counts
// as a bracket: the function is piecewise linear in lambda and becomes
// exactly flat in floating point once the self atom dominates every max.
// ---------------------------------------------------------------------------

DualValue dual_value(const SupportSet& support, const vec& beta, double delta_star,
                     const TransportCost& tc, const LossModel& model) {
    const std::size_t n = support.n_labeled;
    const std::size_t K = support.size();
    if (n == 0) throw data_error("dual_value: no labeled atoms");
    if (!(delta_star >= 0.0)) throw config_error("dual_value: delta must be >= 0");

    // Precompute losses and pairwise costs once; each eval is then O(n*K).
    std::vector<double> atom_loss(K);
    for (std::size_t k = 0; k < K; ++k)
        atom_loss[k] = loss(model, support.points[k].x, support.points[k].y, beta);
    std::vector<std::vector<std::pair<double, double>>> finite(n); // (loss, cost) per v
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t k = 0; k < K; ++k) {
            const CostValue c = cost(support.points[k], support.points[v], tc);
            if (!c.is_infinite()) finite[v].emplace_back(atom_loss[k], c.value());
        }
        if (finite[v].empty()) throw data_error("dual_value: no finite-cost atom for a sample");
    }
    auto eval = [&](double lambda) {
        double sum = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double best = kNegInf;
            for (const auto& [l, c] : finite[v]) best = std::max(best, l - lambda * c);
            sum += best;
        }
        return lambda * delta_star + sum / static_cast<double>(n);
    };

    double lo = 0.0;
    double hi = 1.0;
    double f_hi = eval(hi);
    if (f_hi < eval(lo)) {
        bool bracketed = false;
        for (int k = 0; k < 60; ++k) {
            const double next = hi * 2.0;
            const double f_next = eval(next);
            if (f_next >= f_hi - 1e-14 * (1.0 + std::fabs(f_hi))) {
                // Min lies in [lo, next]: f(hi) <= f(lo) and f(hi) <= f(next)+tol.
                hi = next;
                bracketed = true;
                break;
            }
            lo = hi;
            hi = next;
            f_hi = f_next;
        }
        if (!bracketed)
            throw numeric_error("dual_value: bracket expansion failed after 60 doublings");
    }

    // Golden-section minimization on [lo, hi].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c1 = b - inv_phi * (b - a);
    double c2 = a + inv_phi * (b - a);
    double f1 = eval(c1), f2 = eval(c2);
    for (int iter = 0; iter < 300 && (b - a) > 1e-8 * (1.0 + std::fabs(a) + std::fabs(b)); ++iter) {
        if (f1 <= f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = eval(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = eval(c2);
        }
    }
    DualValue out;
    out.lambda_opt = 0.5 * (a + b);
    out.value = eval(out.lambda_opt);
    // The endpoints may beat the midpoint when the minimizer sits at 0.
    const double f_a = eval(a);
    if (f_a < out.value) {
        out.value = f_a;
        out.lambda_opt = a;
    }
    return out;
}

} // namespace ssldro
