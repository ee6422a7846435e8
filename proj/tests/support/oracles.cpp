#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssldro/losses.hpp"

namespace oracle {

namespace {

constexpr double kPivotTol = 1e-9;

// One tableau pivot: make `col` basic in `row`.
void pivot(std::vector<std::vector<double>>& T, std::vector<std::size_t>& basis,
           std::size_t row, std::size_t col) {
    const double p = T[row][col];
    for (double& v : T[row]) v /= p;
    for (std::size_t r = 0; r < T.size(); ++r) {
        if (r == row || T[r][col] == 0.0) continue;
        const double f = T[r][col];
        for (std::size_t c = 0; c < T[r].size(); ++c) T[r][c] -= f * T[row][c];
        T[r][col] = 0.0;
    }
    basis[row] = col;
}

// Minimize the objective row T[m] over columns [0, active).  Bland's rule
// (lowest eligible index) keeps the walk finite on degenerate tableaus.
LpStatus run_simplex(std::vector<std::vector<double>>& T, std::vector<std::size_t>& basis,
                     std::size_t active) {
    const std::size_t m = T.size() - 1;
    const std::size_t rhs = T[0].size() - 1;
    for (std::size_t iter = 0; iter < 50000; ++iter) {
        std::size_t col = active;
        for (std::size_t c = 0; c < active; ++c) {
            if (T[m][c] < -kPivotTol) {
                col = c;
                break;
            }
        }
        if (col == active) return LpStatus::optimal;
        std::size_t row = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            if (T[r][col] <= kPivotTol) continue;
            const double ratio = T[r][rhs] / T[r][col];
            if (ratio < best - 1e-12 || (ratio < best + 1e-12 && row != m && basis[r] < basis[row])) {
                best = ratio;
                row = r;
            }
        }
        if (row == m) return LpStatus::unbounded;
        pivot(T, basis, row, col);
    }
    throw std::runtime_error("simplex oracle: iteration cap reached");
}

} // namespace

LpResult solve_lp(std::vector<std::vector<double>> A, std::vector<double> b,
                  std::vector<double> c) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    for (std::size_t r = 0; r < m; ++r) {
        if (A[r].size() != n) throw std::runtime_error("simplex oracle: ragged constraint matrix");
        if (b[r] < 0.0) {
            for (double& v : A[r]) v = -v;
            b[r] = -b[r];
        }
    }

    // Tableau: n structural + m artificial columns + rhs; last row = objective.
    const std::size_t cols = n + m + 1;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n; ++j) T[r][j] = A[r][j];
        T[r][n + r] = 1.0;
        T[r][cols - 1] = b[r];
        basis[r] = n + r;
    }

    // Phase 1: minimize the artificial sum; its reduced-cost row is the
    // negative sum of the constraint rows (artificials start basic).
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < cols; ++j)
            if (j < n || j == cols - 1) T[m][j] -= T[r][j];
    if (run_simplex(T, basis, n) == LpStatus::unbounded)
        throw std::runtime_error("simplex oracle: phase 1 unbounded");
    if (T[m][cols - 1] < -1e-7) return {LpStatus::infeasible, 0.0, {}};

    // Kick remaining artificial variables out of the basis (degenerate rows).
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] < n) continue;
        std::size_t col = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(T[r][j]) > kPivotTol) {
                col = j;
                break;
            }
        }
        if (col < n) pivot(T, basis, r, col);
        // An all-zero structural row is a redundant constraint; the artificial
        // stays basic at level zero, which phase 2 never disturbs.
    }

    // Phase 2: rebuild the objective row from c over the structural columns.
    for (std::size_t j = 0; j < cols; ++j) T[m][j] = 0.0;
    for (std::size_t j = 0; j < n; ++j) T[m][j] = c[j];
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] >= n) continue;
        const double f = T[m][basis[r]];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) T[m][j] -= f * T[r][j];
    }
    const LpStatus status = run_simplex(T, basis, n);
    if (status == LpStatus::unbounded) return {LpStatus::unbounded, 0.0, {}};

    LpResult out;
    out.status = LpStatus::optimal;
    out.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (basis[r] < n) out.x[basis[r]] = T[r][cols - 1];
    out.objective = -T[m][cols - 1];
    return out;
}

namespace {

// Regularized lower incomplete gamma P(a, x) by series (x < a+1) or by the
// Lentz continued fraction for the complement.
double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::runtime_error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15)
                return sum * std::exp(-x + a * std::log(x) - lg);
        }
        throw std::runtime_error("gamma_p: series did not converge");
    }
    double b = x + 1.0 - a, cc = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        cc = b + an / cc;
        if (std::fabs(cc) < 1e-300) cc = 1e-300;
        d = 1.0 / d;
        const double del = d * cc;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

} // namespace

double chi_square_pvalue(double stat, int dof) {
    if (dof <= 0) throw std::runtime_error("chi_square_pvalue: dof must be positive");
    if (stat <= 0.0) return 1.0;
    return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) * inv_n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) * inv_n - f));
    }
    return d;
}

double quantile(std::vector<double> samples, double p) {
    if (samples.empty()) throw std::runtime_error("quantile: empty sample");
    std::sort(samples.begin(), samples.end());
    const double raw = std::ceil(p * static_cast<double>(samples.size()));
    std::size_t idx = raw <= 1.0 ? 0 : static_cast<std::size_t>(raw) - 1;
    if (idx >= samples.size()) idx = samples.size() - 1;
    return samples[idx];
}

ssldro::vec ols_fit(const ssldro::LabeledDataset& data) {
    if (data.empty()) throw std::runtime_error("ols_fit: empty data");
    const std::size_t d = data[0].x.size();
    std::vector<double> xtx(d * d, 0.0);
    ssldro::vec xty(d, 0.0);
    for (const auto& ex : data) {
        for (std::size_t i = 0; i < d; ++i) {
            xty[i] += ex.x[i] * ex.y;
            for (std::size_t j = 0; j < d; ++j) xtx[i * d + j] += ex.x[i] * ex.x[j];
        }
    }
    return ssldro::solve_linear(std::move(xtx), std::move(xty), d);
}

ssldro::vec logistic_mle(const ssldro::LabeledDataset& data) {
    if (data.empty()) throw std::runtime_error("logistic_mle: empty data");
    const std::size_t d = data[0].x.size();
    ssldro::vec beta(d, 0.0);
    auto nll = [&](const ssldro::vec& b) {
        double s = 0.0;
        for (const auto& ex : data) {
            const double margin = ex.y * ssldro::dot(b, ex.x);
            s += margin > 0.0 ? std::log1p(std::exp(-margin))
                              : -margin + std::log1p(std::exp(margin));
        }
        return s;
    };
    double f = nll(beta);
    for (int iter = 0; iter < 200; ++iter) {
        ssldro::vec g(d, 0.0);
        std::vector<double> H(d * d, 0.0);
        for (const auto& ex : data) {
            const double margin = ex.y * ssldro::dot(beta, ex.x);
            const double sig = 1.0 / (1.0 + std::exp(margin)); // sigma(-margin)
            const double w = sig * (1.0 - sig);
            for (std::size_t i = 0; i < d; ++i) {
                g[i] -= ex.y * ex.x[i] * sig;
                for (std::size_t j = 0; j < d; ++j) H[i * d + j] += w * ex.x[i] * ex.x[j];
            }
        }
        if (ssldro::norm_inf(g) < 1e-12) break;
        for (std::size_t i = 0; i < d; ++i) H[i * d + i] += 1e-10;
        ssldro::vec step = ssldro::solve_linear(std::move(H), g, d);
        double t = 1.0;
        for (int half = 0; half < 60; ++half) {
            ssldro::vec trial = beta;
            ssldro::axpy(-t, step, trial);
            const double f_trial = nll(trial);
            if (f_trial <= f) {
                beta = std::move(trial);
                f = f_trial;
                break;
            }
            t *= 0.5;
        }
    }
    return beta;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

ssldro::LabeledDataset gaussian_blobs(std::size_t n, std::size_t d, double separation,
                                      ssldro::rng_engine& rng) {
    ssldro::LabeledDataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = (i % 2 == 0) ? 1.0 : -1.0;
        ssldro::vec x(d);
        for (std::size_t j = 0; j < d; ++j)
            x[j] = y * separation + ssldro::standard_normal(rng);
        out.push_back({std::move(x), y});
    }
    return out;
}

ssldro::UnlabeledDataset gaussian_cloud(std::size_t m, std::size_t d, ssldro::rng_engine& rng) {
    ssldro::UnlabeledDataset out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        ssldro::vec x(d);
        for (std::size_t j = 0; j < d; ++j) x[j] = ssldro::standard_normal(rng);
        out.push_back({std::move(x)});
    }
    return out;
}

ssldro::LabeledDataset linear_sample(std::size_t n, const ssldro::vec& beta, double noise_sd,
                                     ssldro::rng_engine& rng) {
    ssldro::LabeledDataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ssldro::vec x(beta.size());
        for (std::size_t j = 0; j < beta.size(); ++j) x[j] = ssldro::standard_normal(rng);
        const double y = ssldro::dot(beta, x) + noise_sd * ssldro::standard_normal(rng);
        out.push_back({std::move(x), y});
    }
    return out;
}

} // namespace oracle
