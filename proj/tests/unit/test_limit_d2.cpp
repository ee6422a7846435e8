// Convergence-in-law check for the two-dimensional profile function: the
// n-scaled statistic at the true parameter, simulated over many independent
// samples, must line up with draws from the exponential-envelope limit
// sampler.  Monte Carlo heavy, so it lives in its own suite and gets a
// generous timeout; the draw counts are scaled to single-core budgets, which
// keeps quantile tolerances at the 15-20% level.

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/rwp.hpp"

using namespace ssldro;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

LabeledDataset draw_sample(std::size_t n, const vec& beta, rng_engine& rng) {
    LabeledDataset data(n);
    for (auto& ex : data) {
        ex.x = {standard_normal(rng), standard_normal(rng)};
        ex.y = dot(beta, ex.x) + standard_normal(rng);
    }
    return data;
}

} // namespace

TEST_SUITE("limit-d2") {

TEST_CASE("n-scaled two-dimensional statistic matches the limit sampler") {
    const vec beta_star{1.0, -0.5};
    const std::size_t n = 800;
    const int reps = 250;

    ssldro::rng_engine sim_rng(401);
    std::vector<double> scaled(reps);
    for (int r = 0; r < reps; ++r) {
        RwpInstance inst;
        inst.labeled = draw_sample(n, beta_star, sim_rng);
        inst.beta_star = beta_star;
        scaled[r] = static_cast<double>(n) * rwp_value(inst);
        CHECK(scaled[r] >= 0.0);
    }

    // Limit pool from the same population, with the exact predictor density.
    LimitPool pool;
    pool.beta_star = beta_star;
    pool.gamma = 1.0;
    ssldro::rng_engine pool_rng(402);
    for (int i = 0; i < 2000; ++i) {
        pool.X.push_back({standard_normal(pool_rng), standard_normal(pool_rng)});
        pool.e.push_back(standard_normal(pool_rng));
    }
    pool.f_x = [](const vec& x) { return std::exp(-0.5 * dot(x, x)) / kTwoPi; };

    ssldro::rng_engine limit_rng(403);
    std::vector<double> limit(4000);
    for (double& v : limit) v = sample_limit_d2(pool, limit_rng).value;

    const double q50 = oracle::quantile(scaled, 0.50) / oracle::quantile(limit, 0.50);
    const double q75 = oracle::quantile(scaled, 0.75) / oracle::quantile(limit, 0.75);
    const double q90 = oracle::quantile(scaled, 0.90) / oracle::quantile(limit, 0.90);
    INFO("quantile ratios (sim/limit): " << q50 << " " << q75 << " " << q90);
    CHECK(std::fabs(q50 - 1.0) < 0.15);
    CHECK(std::fabs(q75 - 1.0) < 0.175);
    CHECK(std::fabs(q90 - 1.0) < 0.20);
}

} // TEST_SUITE
