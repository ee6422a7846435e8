#include "ssldro/rwp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "ssldro/errors.hpp"

namespace ssldro {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Volume of the unit ball in R^d: pi^{d/2} / Gamma(d/2 + 1).
double unit_ball_volume(std::size_t d) {
    return std::pow(kPi, 0.5 * static_cast<double>(d)) /
           std::tgamma(0.5 * static_cast<double>(d) + 1.0);
}

// ---------------------------------------------------------------------------
// Profile-function dual.  Columns j run over every predictor in the support;
// rows i over the labeled sample.  Entry (i, j) of the inner minimization is
//   g_ij(lambda) = ||X_i - X_j||^2 - lambda' w_ij,
//   w_ij = X_j (Y_i - beta*' X_j).
// ---------------------------------------------------------------------------

struct DualProblem {
    const LabeledDataset& labeled;
    std::vector<const vec*> predictors; // all N columns (labeled first)
    const vec& beta_star;
    std::size_t d;
    // Per-column precomputation.
    vec q;       // beta*' X_j
    vec col_sq;  // ||X_j||^2

    explicit DualProblem(const RwpInstance& inst)
        : labeled(inst.labeled), beta_star(inst.beta_star), d(inst.beta_star.size()) {
        if (labeled.empty()) throw data_error("rwp_value: no labeled examples");
        predictors.reserve(inst.N());
        for (const auto& ex : labeled) predictors.push_back(&ex.x);
        for (const auto& x : inst.extra_predictors) predictors.push_back(&x);
        for (const vec* x : predictors)
            if (x->size() != d)
                throw data_error("rwp_value: predictor dimension does not match beta");
        q.resize(predictors.size());
        col_sq.resize(predictors.size());
        for (std::size_t j = 0; j < predictors.size(); ++j) {
            q[j] = dot(beta_star, *predictors[j]);
            col_sq[j] = dot(*predictors[j], *predictors[j]);
        }
    }

    std::size_t n() const { return labeled.size(); }
    std::size_t N() const { return predictors.size(); }

    // Exact dual objective (1/n) sum_i min_j g_ij(lambda).
    double exact_value(const vec& lambda) const {
        double total = 0.0;
        for (std::size_t i = 0; i < n(); ++i) {
            const vec& xi = labeled[i].x;
            const double yi = labeled[i].y;
            const double row_sq = dot(xi, xi);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < N(); ++j) {
                const double resid = yi - q[j];
                const double g = row_sq - 2.0 * dot(xi, *predictors[j]) + col_sq[j] -
                                 dot(lambda, *predictors[j]) * resid;
                best = std::min(best, g);
            }
            total += best;
        }
        return total / static_cast<double>(n());
    }

    // Scales used for smoothing temperatures and gradient tolerances.
    void scales(double& r_max, double& w_max) const {
        r_max = 0.0;
        w_max = 0.0;
        for (std::size_t i = 0; i < n(); ++i) {
            const vec& xi = labeled[i].x;
            const double yi = labeled[i].y;
            const double row_sq = dot(xi, xi);
            for (std::size_t j = 0; j < N(); ++j) {
                const double r = row_sq - 2.0 * dot(xi, *predictors[j]) + col_sq[j];
                r_max = std::max(r_max, r);
                const double resid = std::fabs(yi - q[j]);
                w_max = std::max(w_max, resid * norm_inf(*predictors[j]));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// d = 1 fast path.  The inner minimization reduces to minimizing
//   (1 + lambda beta) x^2 - (2 X_i + lambda Y_i) x
// over the sorted predictor values: the vertex of a convex parabola is
// bracketed by two neighbors, a concave or linear profile is extremized at
// the range endpoints.  One evaluation costs O(n log N).
// ---------------------------------------------------------------------------

double rwp_value_d1(const RwpInstance& inst) {
    const double beta = inst.beta_star[0];
    std::vector<double> xs;
    xs.reserve(inst.N());
    for (const auto& ex : inst.labeled) xs.push_back(ex.x[0]);
    for (const auto& x : inst.extra_predictors) xs.push_back(x[0]);
    std::sort(xs.begin(), xs.end());
    const double x_lo = xs.front(), x_hi = xs.back();
    const std::size_t n = inst.labeled.size();

    auto objective = [&](double lam) {
        const double c2 = 1.0 + lam * beta;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = inst.labeled[i].x[0];
            const double t = 2.0 * xi + lam * inst.labeled[i].y;
            double best;
            if (c2 > 0.0) {
                const double vertex = t / (2.0 * c2);
                auto it = std::lower_bound(xs.begin(), xs.end(), vertex);
                best = std::numeric_limits<double>::infinity();
                if (it != xs.end()) best = std::min(best, c2 * *it * *it - t * *it);
                if (it != xs.begin()) {
                    const double x = *(it - 1);
                    best = std::min(best, c2 * x * x - t * x);
                }
            } else {
                best = std::min(c2 * x_lo * x_lo - t * x_lo, c2 * x_hi * x_hi - t * x_hi);
            }
            total += xi * xi + best;
        }
        return total / static_cast<double>(n);
    };

    double a = -1.0, b = 0.0, c = 1.0;
    double fa = objective(a), fb = objective(b), fc = objective(c);
    double best = std::max({fa, fb, fc});
    while (fc > fb) {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + 2.0 * (b - a);
        if (!(std::fabs(c) < 1e15))
            throw numeric_error("rwp_value: dual is unbounded; the estimating equation "
                                "looks infeasible on this support");
        fc = objective(c);
        best = std::max(best, fc);
    }
    while (fa > fb) {
        c = b;
        fc = fb;
        b = a;
        fb = fa;
        a = b - 2.0 * (c - b);
        if (!(std::fabs(a) < 1e15))
            throw numeric_error("rwp_value: dual is unbounded; the estimating equation "
                                "looks infeasible on this support");
        fa = objective(a);
        best = std::max(best, fa);
    }

    double lo = a, hi = c;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    best = std::max({best, f1, f2});
    for (int it = 0; it < 400 && hi - lo > 1e-11 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
        best = std::max({best, f1, f2});
    }
    return best;
}

// ---------------------------------------------------------------------------
// d >= 2: soft-min smoothing of the dual with temperature continuation.
// softmin_mu(g) = -mu log sum_j exp(-g_j / mu) is concave in lambda, and the
// damped Newton ascent below reaches machine-level gradients in a handful of
// iterations per temperature when warm-started from the previous one.
// ---------------------------------------------------------------------------

struct SmoothEval {
    double value = 0.0;
    vec grad;
    std::vector<vec> hess; // d x d, row-major
};

SmoothEval smooth_eval(const DualProblem& prob, const vec& lambda, double mu,
                       bool with_derivatives) {
    const std::size_t d = prob.d;
    SmoothEval out;
    out.grad.assign(d, 0.0);
    out.hess.assign(d, vec(d, 0.0));
    vec p(prob.N());
    vec w(d), mean_w(d);
    for (std::size_t i = 0; i < prob.n(); ++i) {
        const vec& xi = prob.labeled[i].x;
        const double yi = prob.labeled[i].y;
        const double row_sq = dot(xi, xi);
        double g_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < prob.N(); ++j) {
            const double resid = yi - prob.q[j];
            p[j] = row_sq - 2.0 * dot(xi, *prob.predictors[j]) + prob.col_sq[j] -
                   dot(lambda, *prob.predictors[j]) * resid;
            g_min = std::min(g_min, p[j]);
        }
        double sum = 0.0;
        std::fill(mean_w.begin(), mean_w.end(), 0.0);
        std::vector<vec> second(with_derivatives ? d : 0, vec(d, 0.0));
        for (std::size_t j = 0; j < prob.N(); ++j) {
            const double gap = p[j] - g_min;
            if (gap > 45.0 * mu) continue; // weight below 3e-20: ignore
            const double e = std::exp(-gap / mu);
            sum += e;
            if (!with_derivatives) continue;
            const double resid = yi - prob.q[j];
            const vec& xj = *prob.predictors[j];
            for (std::size_t a = 0; a < d; ++a) w[a] = xj[a] * resid;
            for (std::size_t a = 0; a < d; ++a) {
                mean_w[a] += e * w[a];
                for (std::size_t b = 0; b < d; ++b) second[a][b] += e * w[a] * w[b];
            }
        }
        out.value += g_min - mu * std::log(sum);
        if (!with_derivatives) continue;
        for (std::size_t a = 0; a < d; ++a) mean_w[a] /= sum;
        for (std::size_t a = 0; a < d; ++a) {
            out.grad[a] -= mean_w[a];
            for (std::size_t b = 0; b < d; ++b)
                out.hess[a][b] -= (second[a][b] / sum - mean_w[a] * mean_w[b]) / mu;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(prob.n());
    out.value *= inv_n;
    scale(out.grad, inv_n);
    for (auto& row : out.hess) scale(row, inv_n);
    return out;
}

// One damped-Newton ascent pass through the temperature schedule.  Returns
// true when the final-temperature gradient meets the tolerance.
bool ascend(const DualProblem& prob, vec& lambda, const std::vector<double>& mus,
            double g_tol_final) {
    const std::size_t d = prob.d;
    bool ok = false;
    for (std::size_t level = 0; level < mus.size(); ++level) {
        const double mu = mus[level];
        const bool final_level = level + 1 == mus.size();
        const double g_tol = final_level ? g_tol_final : 1e3 * g_tol_final;
        double nu = 1e-8;
        for (int iter = 0; iter < 80; ++iter) {
            SmoothEval se = smooth_eval(prob, lambda, mu, true);
            if (norm2(se.grad) <= g_tol) {
                ok = final_level;
                break;
            }
            double h_scale = 0.0;
            for (std::size_t a = 0; a < d; ++a) h_scale = std::max(h_scale, -se.hess[a][a]);
            bool moved = false;
            while (!moved && nu <= 1e12 * (1.0 + h_scale)) {
                std::vector<vec> A(d, vec(d, 0.0));
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = 0; b < d; ++b) A[a][b] = -se.hess[a][b];
                    A[a][a] += nu * (1.0 + h_scale);
                }
                vec dir;
                try {
                    dir = solve_linear(A, se.grad);
                } catch (const numeric_error&) {
                    nu = std::max(nu * 16.0, 1e-8);
                    continue;
                }
                const double slope = dot(se.grad, dir);
                double t = 1.0;
                while (t > 1e-20) {
                    vec trial = lambda;
                    axpy(t, dir, trial);
                    const double f_trial = smooth_eval(prob, trial, mu, false).value;
                    if (f_trial >= se.value + 1e-4 * t * slope) {
                        lambda = std::move(trial);
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if (!moved) nu = std::max(nu * 16.0, 1e-8);
            }
            if (!moved) break; // Levenberg blow-up: give this pass up
            if (norm2(lambda) > 1e12)
                throw numeric_error("rwp_value: dual ascent diverged; the estimating "
                                    "equation looks infeasible on this support");
            nu = std::max(nu / 4.0, 1e-10);
        }
        if (final_level && !ok) {
            // Accept a near-miss at the last temperature.
            ok = norm2(smooth_eval(prob, lambda, mu, true).grad) <= 1e3 * g_tol_final;
        }
    }
    return ok;
}

double rwp_value_general(const RwpInstance& inst) {
    DualProblem prob(inst);
    double r_max = 0.0, w_max = 0.0;
    prob.scales(r_max, w_max);
    if (w_max == 0.0) return std::max(prob.exact_value(vec(prob.d, 0.0)), 0.0);

    std::vector<double> mus = {1e-1 * (1.0 + r_max), 1e-4 * (1.0 + r_max),
                               1e-7 * (1.0 + r_max)};
    if (prob.n() * prob.N() <= 4000000) mus.push_back(1e-10 * (1.0 + r_max));
    const double g_tol = 1e-9 * (1.0 + w_max);

    rng_engine restart_rng(0x72777031u);
    for (int attempt = 0; attempt < 3; ++attempt) {
        vec lambda(prob.d, 0.0);
        if (attempt > 0)
            for (double& v : lambda) v = standard_normal(restart_rng) / (1.0 + w_max);
        if (ascend(prob, lambda, mus, g_tol))
            return std::max(prob.exact_value(lambda), 0.0);
    }
    throw numeric_error("rwp_value: dual ascent did not converge within the restart budget");
}

} // namespace

double rwp_value(const RwpInstance& instance) {
    if (instance.beta_star.empty()) throw data_error("rwp_value: empty parameter vector");
    if (instance.labeled.empty()) throw data_error("rwp_value: no labeled examples");
    const std::size_t d = instance.beta_star.size();
    for (const auto& ex : instance.labeled)
        if (ex.x.size() != d)
            throw data_error("rwp_value: labeled predictor dimension mismatch");
    for (const auto& x : instance.extra_predictors)
        if (x.size() != d)
            throw data_error("rwp_value: extra predictor dimension mismatch");
    if (d == 1) return rwp_value_d1(instance);
    return rwp_value_general(instance);
}

// ---------------------------------------------------------------------------
// Limit-law samplers.
// ---------------------------------------------------------------------------

namespace {

// Cholesky that refuses non-positive-definite input (the samplers must not
// silently regularize the pooled covariance).
std::vector<vec> strict_cholesky(std::vector<vec> m) {
    const std::size_t d = m.size();
    double diag_max = 0.0;
    for (std::size_t i = 0; i < d; ++i) diag_max = std::max(diag_max, std::fabs(m[i][i]));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = j; i < d; ++i) {
            double s = m[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i][k] * m[j][k];
            if (i == j) {
                if (s <= 1e-12 * (diag_max + 1e-300))
                    throw numeric_error("limit sampler: pooled covariance is singular");
                m[j][j] = std::sqrt(s);
            } else {
                m[i][j] = s / m[j][j];
            }
        }
        for (std::size_t k = j + 1; k < d; ++k) m[j][k] = 0.0;
    }
    return m;
}

struct PreparedPool {
    std::size_t d = 0;
    std::size_t size = 0;
    const LimitPool* pool = nullptr;
    vec rates;                   // Lambda(X_i) = gamma f_X(X_i) * unit-ball volume
    std::vector<vec> chol_score; // Cholesky factor of the pooled E[e^2 x x']
};

// V_i zeta = A_i (A_i' zeta) with A_i = e_i I - X_i beta*', evaluated without
// forming the d x d matrix.
void apply_v(const LimitPool& pool, std::size_t i, const vec& zeta, vec& u, vec& v_zeta) {
    const vec& x = pool.X[i];
    const double e = pool.e[i];
    // u = A' zeta = e zeta - beta* (x' zeta)
    const double xz = dot(x, zeta);
    u = zeta;
    scale(u, e);
    axpy(-xz, pool.beta_star, u);
    // V zeta = A u = e u - x (beta*' u)
    const double bu = dot(pool.beta_star, u);
    v_zeta = u;
    scale(v_zeta, e);
    axpy(-bu, x, v_zeta);
}

PreparedPool prepare_pool(const LimitPool& pool, std::size_t d, bool needs_density) {
    if (pool.X.empty()) throw data_error("limit sampler: empty Monte Carlo pool");
    if (pool.X.size() != pool.e.size())
        throw data_error("limit sampler: predictor and residual pools differ in length");
    if (pool.beta_star.size() != d)
        throw config_error("limit sampler: parameter dimension mismatch");
    for (const vec& x : pool.X)
        if (x.size() != d) throw data_error("limit sampler: pool predictor dimension mismatch");
    if (!(pool.gamma > 0.0)) throw config_error("limit sampler: gamma must be positive");

    PreparedPool prep;
    prep.d = d;
    prep.size = pool.X.size();
    prep.pool = &pool;
    if (needs_density) {
        if (!pool.f_x) throw config_error("limit sampler: no density evaluator supplied");
        const double ball = unit_ball_volume(d);
        prep.rates.resize(prep.size);
        for (std::size_t i = 0; i < prep.size; ++i) {
            const double density = pool.f_x(pool.X[i]);
            if (!(density >= 0.0) || !std::isfinite(density))
                throw config_error("limit sampler: density evaluator returned an invalid value");
            prep.rates[i] = pool.gamma * density * ball;
        }
    }

    // The Gaussian driver of the limit law is the CLT weak limit of the
    // normalized estimating equation n^{-1/2} sum_i x_i e_i, so its
    // covariance is the pooled second moment E[e^2 x x'].  (V enters the
    // limit objective only through the curvature penalty, not here; the
    // one-dimensional kappa-scaled chi-square is the special case that pins
    // this down.)
    std::vector<vec> score_cov(d, vec(d, 0.0));
    for (std::size_t i = 0; i < prep.size; ++i) {
        const vec& x = pool.X[i];
        const double e_sq = pool.e[i] * pool.e[i];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t c = 0; c < d; ++c) score_cov[a][c] += e_sq * x[a] * x[c];
    }
    for (auto& row : score_cov) scale(row, 1.0 / static_cast<double>(prep.size));
    prep.chol_score = strict_cholesky(std::move(score_cov));
    return prep;
}

vec draw_gaussian(const PreparedPool& prep, rng_engine& rng) {
    vec g(prep.d);
    for (double& v : g) v = standard_normal(rng);
    vec z(prep.d, 0.0);
    for (std::size_t a = 0; a < prep.d; ++a)
        for (std::size_t c = 0; c <= a; ++c) z[a] += prep.chol_score[a][c] * g[c];
    return z;
}

struct LimitEval {
    double value = 0.0;
    vec grad;
    std::vector<vec> hess;
};

// Maximizes a concave limit objective by damped Newton ascent from the
// origin, where the objective vanishes.  Monotone line search keeps the
// attained value nonnegative by construction.
template <typename Eval, typename Value>
vec maximize_limit(const Eval& eval, const Value& value_only, std::size_t d, double g_tol) {
    const bool trace = std::getenv("SSLDRO_TRACE_LIMIT") != nullptr;
    vec zeta(d, 0.0);
    double nu = 1e-6;
    for (int iter = 0; iter < 500; ++iter) {
        LimitEval le = eval(zeta);
        if (trace)
            std::fprintf(stderr, "iter %3d |g| %.3e val %.9e nu %.1e |zeta| %.3e\n", iter,
                         norm2(le.grad), le.value, nu, norm2(zeta));
        if (norm2(le.grad) <= g_tol) return zeta;
        double h_scale = 0.0;
        for (std::size_t a = 0; a < d; ++a) h_scale = std::max(h_scale, -le.hess[a][a]);
        bool moved = false;
        while (!moved && nu <= 1e14 * (1.0 + h_scale)) {
            std::vector<vec> A(d, vec(d, 0.0));
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t c = 0; c < d; ++c) A[a][c] = -le.hess[a][c];
                A[a][a] += nu * (1.0 + h_scale);
            }
            vec dir;
            try {
                dir = solve_linear(A, le.grad);
            } catch (const numeric_error&) {
                nu *= 16.0;
                continue;
            }
            const double dir_norm = norm2(dir);
            const double dir_cap = 100.0 * (1.0 + norm2(zeta));
            if (dir_norm > dir_cap) scale(dir, dir_cap / dir_norm);
            const double slope = dot(le.grad, dir);
            // Once damping is off, a predicted Newton gain below the rounding
            // noise of the objective means the iterate is value-converged to
            // floating precision; a value-based line search cannot verify
            // progress past this point, so stop here.
            if (nu <= 1e-6 &&
                0.5 * slope <= 64.0 * std::numeric_limits<double>::epsilon() *
                                   (1.0 + std::fabs(le.value)))
                return zeta;
            double t = 1.0;
            while (t > 1e-20) {
                vec trial = zeta;
                axpy(t, dir, trial);
                if (value_only(trial) >= le.value + 1e-4 * t * slope) {
                    zeta = std::move(trial);
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) nu *= 16.0;
        }
        if (!moved)
            throw numeric_error("limit sampler: Newton ascent stalled before the tolerance");
        nu = std::max(nu / 4.0, 1e-10);
    }
    throw numeric_error("limit sampler: fixed-point solve did not reach the 1e-8 residual");
}

} // namespace

LimitLawSample sample_limit_d1(const D1Moments& moments, rng_engine& rng) {
    if (!(moments.ex2e2 > 0.0) || !(moments.e_residual_sq > 0.0))
        throw config_error("sample_limit_d1: moments must be positive");
    const double kappa1 = moments.ex2e2 / moments.e_residual_sq;
    const double z = standard_normal(rng);
    LimitLawSample out;
    out.value = kappa1 * z * z;
    out.d = 1;
    out.z = {z};
    out.zeta = {};
    return out;
}

LimitLawSample sample_limit_d2(const LimitPool& pool, rng_engine& rng) {
    const std::size_t d = 2;
    PreparedPool prep = prepare_pool(pool, d, true);
    const vec z = draw_gaussian(prep, rng);
    const double inv_m = 1.0 / static_cast<double>(prep.size);
    const double g_tol = 1e-8 * (1.0 + 2.0 * norm2(z));

    // J(zeta) = -2 zeta'z - mean_i [ s_i - (1 - exp(-L_i s_i)) / L_i ],
    // s_i = zeta'V_i zeta; the exponential arrival is integrated analytically.
    auto value_only = [&](const vec& zeta) {
        vec u(d), v_zeta(d);
        double penalty = 0.0;
        for (std::size_t i = 0; i < prep.size; ++i) {
            apply_v(pool, i, zeta, u, v_zeta);
            const double s = dot(u, u);
            const double rate = prep.rates[i];
            if (rate <= 0.0 || s <= 0.0) continue;
            const double rs = rate * s;
            penalty += rs > 45.0 ? s - 1.0 / rate : s - (1.0 - std::exp(-rs)) / rate;
        }
        return -2.0 * dot(zeta, z) - penalty * inv_m;
    };
    auto eval = [&](const vec& zeta) {
        LimitEval out;
        out.grad.assign(d, 0.0);
        out.hess.assign(d, vec(d, 0.0));
        vec u(d), v_zeta(d);
        double penalty = 0.0;
        for (std::size_t i = 0; i < prep.size; ++i) {
            apply_v(pool, i, zeta, u, v_zeta);
            const double s = dot(u, u);
            const double rate = prep.rates[i];
            if (rate <= 0.0) continue;
            const double rs = rate * s;
            const double decay = rs > 45.0 ? 0.0 : std::exp(-rs);
            penalty += s - (1.0 - decay) / (rate > 0.0 ? rate : 1.0);
            const double g_factor = 1.0 - decay;
            for (std::size_t a = 0; a < d; ++a) {
                out.grad[a] -= 2.0 * g_factor * v_zeta[a] * inv_m;
                for (std::size_t c = 0; c < d; ++c)
                    out.hess[a][c] -= 4.0 * rate * decay * v_zeta[a] * v_zeta[c] * inv_m;
            }
            // -2 (1 - decay) V_i term of the Hessian, via the rank structure.
            const vec& x = pool.X[i];
            const double e = pool.e[i];
            const double b_sq = dot(pool.beta_star, pool.beta_star);
            const double coef = 2.0 * g_factor * inv_m;
            for (std::size_t a = 0; a < d; ++a) {
                out.hess[a][a] -= coef * e * e;
                for (std::size_t c = 0; c < d; ++c)
                    out.hess[a][c] -= coef * (-e * (x[a] * pool.beta_star[c] +
                                                    pool.beta_star[a] * x[c]) +
                                              b_sq * x[a] * x[c]);
            }
        }
        for (std::size_t a = 0; a < d; ++a) out.grad[a] -= 2.0 * z[a];
        out.value = -2.0 * dot(zeta, z) - penalty * inv_m;
        return out;
    };

    LimitLawSample out;
    out.zeta = maximize_limit(eval, value_only, d, g_tol);
    out.value = value_only(out.zeta);
    out.d = d;
    out.z = z;
    return out;
}

LimitLawSample sample_limit_d3plus(const LimitPool& pool, std::size_t d, rng_engine& rng) {
    if (d < 3) throw config_error("sample_limit_d3plus: dimension must be at least 3");
    PreparedPool prep = prepare_pool(pool, d, true);
    const vec z = draw_gaussian(prep, rng);
    const double inv_m = 1.0 / static_cast<double>(prep.size);
    const double g_tol = 1e-8 * (1.0 + 2.0 * norm2(z));
    const double half_d = 0.5 * static_cast<double>(d);
    const double envelope_coef = 2.0 / (static_cast<double>(d) + 2.0);

    // J(zeta) = -2 zeta'z - 2/(d+2) mean_i [ L_i s_i^{d/2+1} ].
    auto value_only = [&](const vec& zeta) {
        vec u(d), v_zeta(d);
        double penalty = 0.0;
        for (std::size_t i = 0; i < prep.size; ++i) {
            apply_v(pool, i, zeta, u, v_zeta);
            const double s = dot(u, u);
            if (s <= 0.0) continue;
            penalty += prep.rates[i] * std::pow(s, half_d + 1.0);
        }
        return -2.0 * dot(zeta, z) - envelope_coef * penalty * inv_m;
    };
    auto eval = [&](const vec& zeta) {
        LimitEval out;
        out.grad.assign(d, 0.0);
        out.hess.assign(d, vec(d, 0.0));
        vec u(d), v_zeta(d);
        double penalty = 0.0;
        const double b_sq = dot(pool.beta_star, pool.beta_star);
        for (std::size_t i = 0; i < prep.size; ++i) {
            apply_v(pool, i, zeta, u, v_zeta);
            const double s = dot(u, u);
            const double rate = prep.rates[i];
            if (s <= 0.0 || rate <= 0.0) continue;
            penalty += rate * std::pow(s, half_d + 1.0);
            const double s_hd = std::pow(s, half_d);          // s^{d/2}
            const double s_hd_m1 = s_hd / s;                  // s^{d/2 - 1}
            for (std::size_t a = 0; a < d; ++a) {
                out.grad[a] -= 2.0 * rate * s_hd * v_zeta[a] * inv_m;
                for (std::size_t c = 0; c < d; ++c)
                    out.hess[a][c] -=
                        2.0 * static_cast<double>(d) * rate * s_hd_m1 * v_zeta[a] * v_zeta[c] * inv_m;
            }
            const vec& x = pool.X[i];
            const double e = pool.e[i];
            const double coef = 2.0 * rate * s_hd * inv_m;
            for (std::size_t a = 0; a < d; ++a) {
                out.hess[a][a] -= coef * e * e;
                for (std::size_t c = 0; c < d; ++c)
                    out.hess[a][c] -= coef * (-e * (x[a] * pool.beta_star[c] +
                                                    pool.beta_star[a] * x[c]) +
                                              b_sq * x[a] * x[c]);
            }
        }
        for (std::size_t a = 0; a < d; ++a) out.grad[a] -= 2.0 * z[a];
        out.value = -2.0 * dot(zeta, z) - envelope_coef * penalty * inv_m;
        return out;
    };

    LimitLawSample out;
    out.zeta = maximize_limit(eval, value_only, d, g_tol);
    out.value = value_only(out.zeta);
    out.d = d;
    out.z = z;
    return out;
}

double kappa1_plugin(const LabeledDataset& labeled, double beta_star) {
    if (labeled.empty()) throw data_error("kappa1_plugin: empty dataset");
    double num = 0.0, den = 0.0;
    for (const auto& ex : labeled) {
        if (ex.x.size() != 1) throw data_error("kappa1_plugin: needs one-dimensional predictors");
        const double x = ex.x[0];
        const double e = ex.y - beta_star * x;
        num += x * x * e * e;
        den += (e - beta_star * x) * (e - beta_star * x);
    }
    num /= static_cast<double>(labeled.size());
    den /= static_cast<double>(labeled.size());
    if (!(num > 0.0) || !(den > 0.0))
        throw data_error("kappa1_plugin: degenerate moments in the plug-in ratio");
    return num / den;
}

double GaussianDensity::operator()(const vec& x) const {
    const std::size_t d = mean.size();
    if (x.size() != d) throw config_error("GaussianDensity: dimension mismatch");
    // Forward substitution: solve L z = (x - mean).
    vec z(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = x[i] - mean[i];
        for (std::size_t k = 0; k < i; ++k) s -= cov_chol[i][k] * z[k];
        z[i] = s / cov_chol[i][i];
    }
    return std::exp(-0.5 * dot(z, z) - log_normalizer);
}

GaussianDensity fit_gaussian_density(const std::vector<vec>& points) {
    if (points.empty()) throw data_error("fit_gaussian_density: no points");
    const std::size_t d = points[0].size();
    GaussianDensity out;
    out.mean.assign(d, 0.0);
    for (const vec& x : points) {
        if (x.size() != d) throw data_error("fit_gaussian_density: inconsistent dimensions");
        axpy(1.0, x, out.mean);
    }
    scale(out.mean, 1.0 / static_cast<double>(points.size()));
    std::vector<vec> cov(d, vec(d, 0.0));
    for (const vec& x : points)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t c = 0; c < d; ++c)
                cov[a][c] += (x[a] - out.mean[a]) * (x[c] - out.mean[c]);
    double diag_max = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        cov[a][a] /= static_cast<double>(points.size());
        diag_max = std::max(diag_max, cov[a][a]);
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t c = 0; c < d; ++c)
            if (a != c) cov[a][c] /= static_cast<double>(points.size());
    for (std::size_t a = 0; a < d; ++a) cov[a][a] += 1e-10 * (diag_max + 1.0);
    out.cov_chol = strict_cholesky(std::move(cov));
    out.log_normalizer = 0.5 * static_cast<double>(d) * std::log(2.0 * kPi);
    for (std::size_t a = 0; a < d; ++a) out.log_normalizer += std::log(out.cov_chol[a][a]);
    return out;
}

vec least_squares_fit(const LabeledDataset& labeled) {
    if (labeled.empty()) throw data_error("least_squares_fit: empty dataset");
    const std::size_t d = labeled[0].x.size();
    std::vector<vec> gram(d, vec(d, 0.0));
    vec rhs(d, 0.0);
    for (const auto& ex : labeled) {
        if (ex.x.size() != d) throw data_error("least_squares_fit: inconsistent dimensions");
        for (std::size_t a = 0; a < d; ++a) {
            rhs[a] += ex.x[a] * ex.y;
            for (std::size_t c = 0; c < d; ++c) gram[a][c] += ex.x[a] * ex.x[c];
        }
    }
    return solve_linear(gram, rhs);
}

double limit_rate(std::size_t n, std::size_t d) {
    if (n == 0) throw config_error("limit_rate: n must be positive");
    if (d <= 2) return static_cast<double>(n);
    return std::pow(static_cast<double>(n),
                    0.5 + 3.0 / (2.0 * static_cast<double>(d) + 2.0));
}

double select_delta(double alpha, std::size_t n, std::size_t d,
                    const std::function<double(rng_engine&)>& limit_sampler,
                    std::size_t num_samples, rng_engine& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("select_delta: alpha must be in (0,1)");
    if (num_samples == 0) throw config_error("select_delta: need at least one sample");
    if (!limit_sampler) throw config_error("select_delta: no limit sampler supplied");
    vec samples(num_samples);
    for (double& s : samples) s = limit_sampler(rng);
    std::sort(samples.begin(), samples.end());
    // Lowest order statistic whose empirical cdf reaches 1 - alpha.
    const double target = (1.0 - alpha) * static_cast<double>(num_samples);
    std::size_t index = static_cast<std::size_t>(std::ceil(target));
    if (index > 0) --index;
    if (index >= num_samples) index = num_samples - 1;
    return samples[index] / limit_rate(n, d);
}

} // namespace ssldro
