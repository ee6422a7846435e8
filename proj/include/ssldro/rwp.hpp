#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ssldro/dataset.hpp"
#include "ssldro/rng.hpp"
#include "ssldro/vecops.hpp"

namespace ssldro {

// Profile-function instance: how far (in squared-euclidean transport cost,
// labels immovable) the empirical measure must travel before the hypothesized
// parameter satisfies the least-squares estimating equation on the augmented
// predictor support.
struct RwpInstance {
    LabeledDataset labeled;                // (X_i, Y_i), i = 1..n
    std::vector<vec> extra_predictors;     // unlabeled predictors joining the support
    vec beta_star;                         // hypothesized parameter

    std::size_t n() const { return labeled.size(); }
    std::size_t N() const { return labeled.size() + extra_predictors.size(); }
    double gamma() const { return static_cast<double>(N()) / static_cast<double>(n()); }
};

// Value of the profile function: max over the dual multiplier of the
// concave piecewise-linear dual
//   (1/n) sum_i min_j { ||X_i - X_j||^2 - lambda' X_j (Y_i - beta*' X_j) }.
// d = 1 uses an exact bracketed line search; d >= 2 uses soft-min smoothing
// with a damped Newton ascent and an exact final evaluation.
double rwp_value(const RwpInstance& instance);

// One draw from the asymptotic law of the (rate-scaled) profile function.
struct LimitLawSample {
    double value = 0.0;     // nonnegative limit draw
    std::size_t d = 0;      // predictor dimension
    vec z;                  // the Gaussian draw, for audit
    vec zeta;               // the inner maximizer, for audit
};

// Monte Carlo pool standing in for the population law of (X, e) plus the
// model constants the limit formulas need.
struct LimitPool {
    std::vector<vec> X;                        // pool predictors
    vec e;                                     // pool residuals, same length
    vec beta_star;                             // parameter the residuals refer to
    double gamma = 1.0;                        // support ratio N/n
    std::function<double(const vec&)> f_x;     // predictor density (d >= 2 only)
};

// d = 1: kappa1 * chi-squared(1) with kappa1 = E[X^2 e^2] / E[(e - beta* X)^2].
struct D1Moments {
    double ex2e2 = 0.0;          // E[X^2 e^2]
    double e_residual_sq = 0.0;  // E[(e - beta* X)^2]
};
LimitLawSample sample_limit_d1(const D1Moments& moments, rng_engine& rng);

// d = 2: draws Z ~ N(0, E[V]) and maximizes the concave limit objective
//   J(zeta) = -2 zeta'Z - E[ s - (1 - exp(-Lambda s)) / Lambda ],  s = zeta'V zeta,
// with the exponential first-arrival variable integrated out analytically;
// Lambda(X) = gamma f_X(X) pi^{d/2} / Gamma(d/2 + 1).
LimitLawSample sample_limit_d2(const LimitPool& pool, rng_engine& rng);

// d >= 3: same construction with the polynomial envelope
//   J(zeta) = -2 zeta'Z - 2/(d+2) E[ Lambda(X) s^{d/2+1} ].
LimitLawSample sample_limit_d3plus(const LimitPool& pool, std::size_t d, rng_engine& rng);

// Plug-in kappa1 from a labeled sample (d = 1 only).
double kappa1_plugin(const LabeledDataset& labeled, double beta_star);

// Gaussian density fitted by maximum likelihood to a point cloud; the
// fallback density evaluator when the caller supplies none.
struct GaussianDensity {
    vec mean;
    std::vector<vec> cov_chol;  // lower-triangular Cholesky factor of the covariance
    double log_normalizer = 0.0;
    double operator()(const vec& x) const;
};
GaussianDensity fit_gaussian_density(const std::vector<vec>& points);

// Ordinary least squares on the labeled data (normal equations); the
// plug-in hypothesis for calibration.
vec least_squares_fit(const LabeledDataset& labeled);

// Radius calibration: the (1 - alpha) empirical quantile of the limit law
// divided by the dimension-dependent convergence rate (n for d <= 2,
// n^{1/2 + 3/(2d+2)} for d >= 3).
double limit_rate(std::size_t n, std::size_t d);
double select_delta(double alpha, std::size_t n, std::size_t d,
                    const std::function<double(rng_engine&)>& limit_sampler,
                    std::size_t num_samples, rng_engine& rng);

} // namespace ssldro
