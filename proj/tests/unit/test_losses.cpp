#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ssldro/losses.hpp"

using namespace ssldro;

TEST_SUITE("losses") {

TEST_CASE("logistic loss values") {
    const LossModel m{LossKind::logistic, 2};
    CHECK(loss(m, {1.0, 2.0}, 1.0, {0.0, 0.0}) == doctest::Approx(std::log(2.0)));
    // Perfectly classified with a huge margin: loss ~ exp(-margin) ~ 0.
    CHECK(loss(m, {10.0, 0.0}, 1.0, {10.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));
    // Deep on the wrong side: loss ~ margin, with no overflow.
    const double big = loss(m, {100.0, 0.0}, -1.0, {10.0, 0.0});
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("squared loss values") {
    const LossModel m{LossKind::squared, 2};
    CHECK(loss(m, {1.0, 1.0}, 3.0, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(loss(m, {2.0, 0.0}, 4.0, {2.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("gradients match central finite differences") {
    ssldro::rng_engine rng(42);
    for (LossKind kind : {LossKind::logistic, LossKind::squared}) {
        const LossModel m{kind, 3};
        for (int rep = 0; rep < 30; ++rep) {
            vec x(3), beta(3);
            for (auto* v : {&x, &beta})
                for (double& c : *v) c = 2.0 * standard_normal(rng);
            const double y = kind == LossKind::logistic
                                 ? (uniform01(rng) < 0.5 ? -1.0 : 1.0)
                                 : 3.0 * standard_normal(rng);
            const vec g = grad(m, x, y, beta);
            for (std::size_t j = 0; j < 3; ++j) {
                const double fd = oracle::central_difference(
                    [&](double t) {
                        vec b = beta;
                        b[j] = t;
                        return loss(m, x, y, b);
                    },
                    beta[j], 1e-6 * (1.0 + std::fabs(beta[j])));
                CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("loss_and_grad agrees with the separate calls") {
    const LossModel m{LossKind::logistic, 2};
    const vec x{0.3, -0.7}, beta{1.1, 0.4};
    const LossValueGrad both = loss_and_grad(m, x, -1.0, beta);
    CHECK(both.value == loss(m, x, -1.0, beta));
    CHECK(both.gradient == grad(m, x, -1.0, beta));
}

} // TEST_SUITE
