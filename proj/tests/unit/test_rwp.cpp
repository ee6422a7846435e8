#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/rwp.hpp"

using namespace ssldro;

namespace {

std::vector<const vec*> support_columns(const RwpInstance& inst) {
    std::vector<const vec*> cols;
    for (const auto& ex : inst.labeled) cols.push_back(&ex.x);
    for (const auto& x : inst.extra_predictors) cols.push_back(&x);
    return cols;
}

// The concave dual evaluated at a fixed multiplier, written straight from its
// definition; any probe must stay below the reported maximum.
double dual_probe(const RwpInstance& inst, const vec& lambda) {
    const auto cols = support_columns(inst);
    double total = 0.0;
    for (const auto& ex : inst.labeled) {
        double best = std::numeric_limits<double>::infinity();
        for (const vec* xj : cols) {
            double diff_sq = 0.0;
            for (std::size_t k = 0; k < ex.x.size(); ++k) {
                const double t = ex.x[k] - (*xj)[k];
                diff_sq += t * t;
            }
            const double resid = ex.y - dot(inst.beta_star, *xj);
            best = std::min(best, diff_sq - dot(lambda, *xj) * resid);
        }
        total += best;
    }
    return total / static_cast<double>(inst.labeled.size());
}

struct PrimalLp {
    bool feasible = false;
    double value = 0.0;
};

// Independent primal oracle: minimize sum_ij pi_ij ||X_i - X_j||^2 subject to
// per-row mass 1/n and the estimating equation
// sum_ij pi_ij X_j (Y_i - beta*'X_j) = 0, solved by the reference simplex.
PrimalLp primal_lp_value(const RwpInstance& inst) {
    const auto cols = support_columns(inst);
    const std::size_t n = inst.labeled.size();
    const std::size_t N = cols.size();
    const std::size_t d = inst.beta_star.size();
    const std::size_t vars = n * N;
    std::vector<std::vector<double>> A(n + d, std::vector<double>(vars, 0.0));
    std::vector<double> b(n + d, 0.0);
    std::vector<double> c(vars, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t v = i * N + j;
            A[i][v] = 1.0;
            double diff_sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double t = inst.labeled[i].x[k] - (*cols[j])[k];
                diff_sq += t * t;
            }
            c[v] = diff_sq;
            const double resid = inst.labeled[i].y - dot(inst.beta_star, *cols[j]);
            for (std::size_t k = 0; k < d; ++k) A[n + k][v] = (*cols[j])[k] * resid;
        }
    }
    const oracle::LpResult r = oracle::solve_lp(A, b, c);
    if (r.status == oracle::LpStatus::infeasible) return {false, 0.0};
    REQUIRE(r.status == oracle::LpStatus::optimal);
    return {true, r.objective};
}

RwpInstance random_instance(std::size_t n, std::size_t extras, std::size_t d,
                            double perturb, rng_engine& rng) {
    RwpInstance inst;
    vec truth(d);
    for (double& v : truth) v = 0.5 + uniform01(rng);
    inst.labeled = oracle::linear_sample(n, truth, 0.4, rng);
    const UnlabeledDataset cloud = oracle::gaussian_cloud(extras, d, rng);
    for (const auto& u : cloud) inst.extra_predictors.push_back(u.x);
    inst.beta_star = oracle::ols_fit(inst.labeled);
    for (double& v : inst.beta_star) v += perturb * (2.0 * uniform01(rng) - 1.0);
    return inst;
}

LimitPool make_pool(std::size_t m, std::size_t d, double gamma, std::uint64_t seed) {
    LimitPool pool;
    pool.gamma = gamma;
    pool.beta_star.assign(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) pool.beta_star[k] = 0.25 * static_cast<double>(k + 1);
    rng_engine rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        vec x(d);
        for (double& v : x) v = standard_normal(rng);
        pool.X.push_back(std::move(x));
        pool.e.push_back(standard_normal(rng));
    }
    pool.f_x = fit_gaussian_density(pool.X);
    return pool;
}

} // namespace

TEST_SUITE("rwp") {

TEST_CASE("value vanishes exactly at the least-squares fit") {
    ssldro::rng_engine rng(300);
    for (std::size_t d : {std::size_t{1}, std::size_t{2}}) {
        RwpInstance inst = random_instance(8, 0, d, 0.0, rng);
        const double value = rwp_value(inst);
        CHECK(value >= 0.0);
        CHECK(value <= 1e-8);
    }
}

TEST_CASE("one-dimensional value matches the primal transport program") {
    ssldro::rng_engine rng(301);
    int feasible = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + uniform_below(rng, 4);
        const std::size_t extras = uniform_below(rng, 3);
        RwpInstance inst = random_instance(n, extras, 1, 0.25, rng);
        const PrimalLp lp = primal_lp_value(inst);
        if (!lp.feasible) {
            CHECK_THROWS_AS(rwp_value(inst), numeric_error);
            continue;
        }
        ++feasible;
        const double value = rwp_value(inst);
        INFO("trial " << trial << " n=" << n << " extras=" << extras);
        CHECK(value == doctest::Approx(lp.value).epsilon(1e-6).scale(1.0));
    }
    CHECK(feasible >= 12); // the generator must actually exercise the solver
}

TEST_CASE("two-dimensional value matches the primal transport program") {
    ssldro::rng_engine rng(302);
    int feasible = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + uniform_below(rng, 3);
        const std::size_t extras = uniform_below(rng, 3);
        RwpInstance inst = random_instance(n, extras, 2, 0.15, rng);
        const PrimalLp lp = primal_lp_value(inst);
        if (!lp.feasible) continue; // the smoothed path owes no infeasibility proof
        ++feasible;
        const double value = rwp_value(inst);
        INFO("trial " << trial << " n=" << n << " extras=" << extras);
        CHECK(value == doctest::Approx(lp.value).epsilon(1e-5).scale(1.0));
    }
    CHECK(feasible >= 5);
}

TEST_CASE("random dual probes never beat the reported maximum") {
    ssldro::rng_engine rng(303);
    for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
        RwpInstance inst = random_instance(5, 2, d, 0.1, rng);
        double value = 0.0;
        try {
            value = rwp_value(inst);
        } catch (const numeric_error&) {
            continue; // infeasible draw: nothing to probe against
        }
        for (int probe = 0; probe < 200; ++probe) {
            vec lambda(d);
            for (double& v : lambda) v = 4.0 * (uniform01(rng) - 0.5);
            CHECK(dual_probe(inst, lambda) <= value + 1e-7 * (1.0 + std::fabs(value)));
        }
    }
}

TEST_CASE("extra support predictors never increase the value") {
    ssldro::rng_engine rng(304);
    for (int trial = 0; trial < 10; ++trial) {
        RwpInstance base = random_instance(6, 0, 1, 0.2, rng);
        if (!primal_lp_value(base).feasible) continue;
        const double without = rwp_value(base);
        RwpInstance wider = base;
        const UnlabeledDataset cloud = oracle::gaussian_cloud(3, 1, rng);
        for (const auto& u : cloud) wider.extra_predictors.push_back(u.x);
        const double with_extras = rwp_value(wider);
        CHECK(with_extras <= without + 1e-8 * (1.0 + without));
        CHECK(with_extras >= 0.0);
    }
}

TEST_CASE("an infeasible estimating equation is reported, not silently capped") {
    // A single support point cannot satisfy X(Y - beta*X) = 0 unless it
    // already does; the dual is unbounded and must throw.
    RwpInstance inst;
    inst.labeled = {{{1.0}, 1.0}};
    inst.beta_star = {0.0};
    CHECK_THROWS_AS(rwp_value(inst), numeric_error);
}

TEST_CASE("input validation") {
    RwpInstance inst;
    inst.beta_star = {1.0};
    CHECK_THROWS_AS(rwp_value(inst), data_error); // no labeled rows
    inst.labeled = {{{1.0, 2.0}, 1.0}};
    CHECK_THROWS_AS(rwp_value(inst), data_error); // dimension mismatch
    inst.beta_star = {};
    CHECK_THROWS_AS(rwp_value(inst), data_error); // empty parameter
}

TEST_CASE("kappa1 plug-in on a hand-checked sample") {
    const LabeledDataset data{{{1.0}, 2.0}, {{2.0}, 1.0}};
    // beta* = 0.5: e = (1.5, 0); E[X^2 e^2] = 1.125, E[(e - beta* X)^2] = 1.
    CHECK(kappa1_plugin(data, 0.5) == doctest::Approx(1.125).epsilon(1e-15));
    const LabeledDataset degenerate{{{0.0}, 1.0}, {{0.0}, -1.0}};
    CHECK_THROWS_AS(kappa1_plugin(degenerate, 1.0), data_error);
    CHECK_THROWS_AS(kappa1_plugin({}, 1.0), data_error);
    CHECK_THROWS_AS(kappa1_plugin({{{1.0, 2.0}, 1.0}}, 1.0), data_error);
}

TEST_CASE("one-dimensional limit sampler follows the scaled chi-square law") {
    const double kappa = 2.0;
    const D1Moments moments{2.0, 1.0};
    ssldro::rng_engine rng(305);
    const std::size_t M = 100000;
    std::vector<double> samples(M);
    double mean = 0.0;
    for (double& s : samples) {
        const LimitLawSample draw = sample_limit_d1(moments, rng);
        CHECK(draw.value >= 0.0);
        s = draw.value;
        mean += s;
    }
    mean /= static_cast<double>(M);

    // CDF of kappa * chi^2_1 is erf(sqrt(v / (2 kappa))).
    auto cdf = [kappa](double v) { return v <= 0.0 ? 0.0 : std::erf(std::sqrt(v / (2.0 * kappa))); };
    const double ks = oracle::ks_statistic(samples, cdf);
    CHECK(ks < 1.9495 / std::sqrt(static_cast<double>(M))); // 0.1% KS critical value

    const double se = kappa * std::sqrt(2.0 / static_cast<double>(M));
    CHECK(std::fabs(mean - kappa) < 4.0 * se);
    CHECK(oracle::quantile(samples, 0.95) ==
          doctest::Approx(kappa * 3.841458820694124).epsilon(0.05));

    CHECK_THROWS_AS(sample_limit_d1({0.0, 1.0}, rng), config_error);
    CHECK_THROWS_AS(sample_limit_d1({1.0, -1.0}, rng), config_error);
}

TEST_CASE("limit draws stay inside the audit envelope") {
    const LimitPool pool2 = make_pool(60, 2, 1.5, 306);
    const LimitPool pool3 = make_pool(60, 3, 1.5, 307);
    ssldro::rng_engine rng(308);
    for (int rep = 0; rep < 20; ++rep) {
        const LimitLawSample a = sample_limit_d2(pool2, rng);
        REQUIRE(a.z.size() == 2);
        REQUIRE(a.zeta.size() == 2);
        CHECK(a.value >= 0.0); // the objective vanishes at zeta = 0
        CHECK(a.value <= 2.0 * norm2(a.z) * norm2(a.zeta) + 1e-9);

        const LimitLawSample b = sample_limit_d3plus(pool3, 3, rng);
        REQUIRE(b.z.size() == 3);
        REQUIRE(b.zeta.size() == 3);
        CHECK(b.value >= 0.0);
        CHECK(b.value <= 2.0 * norm2(b.z) * norm2(b.zeta) + 1e-9);
    }
}

TEST_CASE("support-ratio scaling of the polynomial-envelope sampler is exact") {
    // J with rate multiplier a satisfies max J_a = a^{-1/(d+1)} max J_1, so
    // doubling gamma rescales every same-seed draw by 2^{-1/4} when d = 3.
    LimitPool base = make_pool(50, 3, 1.0, 309);
    LimitPool doubled = base;
    doubled.gamma = 2.0;
    const double factor = std::pow(2.0, -0.25);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        ssldro::rng_engine rng_a(seed), rng_b(seed);
        const LimitLawSample a = sample_limit_d3plus(base, 3, rng_a);
        const LimitLawSample b = sample_limit_d3plus(doubled, 3, rng_b);
        REQUIRE(a.value > 1e-4);
        CHECK(b.value == doctest::Approx(a.value * factor).epsilon(1e-6));
    }
}

TEST_CASE("limit pool validation") {
    ssldro::rng_engine rng(310);
    LimitPool pool;
    pool.beta_star = {1.0, 1.0};
    CHECK_THROWS_AS(sample_limit_d2(pool, rng), data_error); // empty pool
    pool = make_pool(10, 2, 1.0, 311);
    LimitPool broken = pool;
    broken.e.pop_back();
    CHECK_THROWS_AS(sample_limit_d2(broken, rng), data_error);
    broken = pool;
    broken.f_x = nullptr;
    CHECK_THROWS_AS(sample_limit_d2(broken, rng), config_error);
    broken = pool;
    broken.gamma = 0.0;
    CHECK_THROWS_AS(sample_limit_d2(broken, rng), config_error);
    CHECK_THROWS_AS(sample_limit_d3plus(pool, 2, rng), config_error);
}

TEST_CASE("gaussian density fit reproduces the sample moments") {
    const std::vector<vec> points{{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}};
    const GaussianDensity density = fit_gaussian_density(points);
    CHECK(density.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(density.mean[1] == doctest::Approx(1.0).epsilon(1e-15));
    // MLE covariance is the identity here, so the peak density is 1/(2 pi).
    CHECK(density({1.0, 1.0}) == doctest::Approx(1.0 / (2.0 * 3.14159265358979323846))
                                     .epsilon(1e-6));
    CHECK(density({1.0, 3.0}) == doctest::Approx(std::exp(-2.0) / (2.0 * 3.14159265358979323846))
                                     .epsilon(1e-6));
    CHECK_THROWS_AS(fit_gaussian_density({}), data_error);
}

TEST_CASE("plug-in least squares") {
    const LabeledDataset tiny{{{1.0}, 2.0}, {{2.0}, 4.0}};
    const vec beta = least_squares_fit(tiny);
    CHECK(beta[0] == doctest::Approx(2.0).epsilon(1e-15));
    ssldro::rng_engine rng(312);
    const LabeledDataset data = oracle::linear_sample(40, {1.0, -2.0, 0.5}, 0.3, rng);
    const vec fit = least_squares_fit(data);
    const vec ref = oracle::ols_fit(data);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(fit[k] == doctest::Approx(ref[k]).epsilon(1e-12));
}

TEST_CASE("radius calibration from the limit quantile") {
    CHECK(limit_rate(50, 1) == 50.0);
    CHECK(limit_rate(50, 2) == 50.0);
    CHECK(limit_rate(1000, 3) == std::pow(1000.0, 0.875));
    CHECK(limit_rate(1000, 4) == std::pow(1000.0, 0.8));
    CHECK_THROWS_AS(limit_rate(0, 1), config_error);

    // Deterministic sampler 1, 2, ..., M pins the quantile index exactly.
    std::size_t k = 0;
    auto counter = [&k](ssldro::rng_engine&) { return static_cast<double>(++k); };
    ssldro::rng_engine rng(313);
    CHECK(select_delta(0.05, 100, 1, counter, 100, rng) == 95.0 / 100.0);
    k = 0;
    CHECK(select_delta(0.5, 10, 1, counter, 2, rng) == 1.0 / 10.0);

    CHECK_THROWS_AS(select_delta(0.0, 100, 1, counter, 10, rng), config_error);
    CHECK_THROWS_AS(select_delta(1.0, 100, 1, counter, 10, rng), config_error);
    CHECK_THROWS_AS(select_delta(0.05, 100, 1, counter, 0, rng), config_error);
    CHECK_THROWS_AS(select_delta(0.05, 100, 1, nullptr, 10, rng), config_error);
}

} // TEST_SUITE
