#include "ssldro/mlmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssldro {

double level_success_probability() {
    return 1.0 - std::pow(2.0, -1.5);
}

double expected_draws_per_sample() {
    // sum_g p(1-p)^g (2^{g+1} + 1) = 1 + 2p / (1 - 2(1-p)), convergent since
    // 2(1-p) = 2^{-1/2} < 1.
    const double p = level_success_probability();
    return 1.0 + 2.0 * p / (1.0 - 2.0 * (1.0 - p));
}

HValues h_values(const SupportPoint& w, const vec& x, double y,
                 const DualIterate& iterate, const SmoothingConfig& config,
                 const TransportCost& tc, const LossModel& model, double shift) {
    if (!(config.epsilon > 0.0)) throw config_error("h_values: epsilon must be > 0");
    if (!(iterate.lambda >= 0.0)) throw config_error("h_values: lambda must be >= 0");
    HValues h;
    h.h2.assign(iterate.beta.size(), 0.0);
    const CostValue c = cost(w, SupportPoint{x, y, Provenance::labeled}, tc);
    if (c.is_infinite()) return h; // (0, 0, 0): flipped atoms carry no weight
    const double score = loss(model, w.x, w.y, iterate.beta) - iterate.lambda * c.value();
    h.h0 = std::exp((score - shift) / config.epsilon);
    h.h1 = h.h0 * c.value();
    h.h2 = grad(model, w.x, w.y, iterate.beta);
    scale(h.h2, h.h0);
    return h;
}

namespace {

// ratio-of-averages with the zero convention; shared scaling factors cancel.
inline double safe_ratio(double num, double den) {
    return den > 0.0 ? num / den : 0.0;
}

struct AtomTable {
    // Per support atom: finite-cost flag, cost, score, and (lazily) h0 under
    // the call's common shift.  Gradients are folded in atom-wise later.
    std::vector<char> finite;
    std::vector<double> cost_value;
    std::vector<double> score;
    std::vector<double> h0;
};

AtomTable build_table(const SupportSet& support, const vec& x, double y,
                      const DualIterate& iterate, const TransportCost& tc,
                      const LossModel& model) {
    const std::size_t K = support.size();
    AtomTable t;
    t.finite.assign(K, 0);
    t.cost_value.assign(K, 0.0);
    t.score.assign(K, 0.0);
    t.h0.assign(K, 0.0);
    const SupportPoint sample{x, y, Provenance::labeled};
    for (std::size_t k = 0; k < K; ++k) {
        const CostValue c = cost(support.points[k], sample, tc);
        if (c.is_infinite()) continue;
        t.finite[k] = 1;
        t.cost_value[k] = c.value();
        t.score[k] = loss(model, support.points[k].x, support.points[k].y, iterate.beta) -
                     iterate.lambda * c.value();
    }
    return t;
}

struct Attempt {
    double Lambda;
    vec Gamma;
    bool degenerate; // some sub-average denominator was exactly zero
};

Attempt one_attempt(const SupportSet& support, AtomTable& table, const vec& x, double y,
                    const DualIterate& iterate, const SmoothingConfig& config,
                    const TransportCost& tc, const LossModel& model,
                    rng_engine& rng, int G) {
    (void)x;
    (void)y;
    (void)tc; // costs are pre-tabulated against (x, y) in `table`
    const std::size_t K = support.size();
    const std::size_t half = std::size_t{1} << G; // 2^G odd draws, 2^G even draws
    const std::size_t d = iterate.beta.size();

    // W0 first, then W_1 .. W_{2^{G+1}} counted per atom and parity.
    const std::size_t w0 = uniform_below(rng, K);
    std::vector<std::uint64_t> odd_count(K, 0), even_count(K, 0);
    for (std::size_t i = 1; i <= 2 * half; ++i) {
        const std::size_t k = uniform_below(rng, K);
        if (i % 2 == 1)
            ++odd_count[k];
        else
            ++even_count[k];
    }

    // Common shift: max score among the atoms that actually appear, so every
    // exponential lands in (0, 1].  Ratios are invariant to this choice.
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k)
        if (table.finite[k] && (k == w0 || odd_count[k] + even_count[k] > 0))
            shift = std::max(shift, table.score[k]);
    if (shift == -std::numeric_limits<double>::infinity()) shift = 0.0; // all draws flipped

    for (std::size_t k = 0; k < K; ++k)
        table.h0[k] = (table.finite[k] && (odd_count[k] + even_count[k] > 0 || k == w0))
                          ? std::exp((table.score[k] - shift) / config.epsilon)
                          : 0.0;

    // Sub-sample sums of h0, h1 = h0*c and h2 = h0*grad, folded per atom.
    double s0_odd = 0.0, s0_even = 0.0, s1_odd = 0.0, s1_even = 0.0;
    vec s2_odd(d, 0.0), s2_even(d, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const std::uint64_t total = odd_count[k] + even_count[k];
        if (total == 0 || !table.finite[k]) continue;
        const double w_odd = static_cast<double>(odd_count[k]) * table.h0[k];
        const double w_even = static_cast<double>(even_count[k]) * table.h0[k];
        s0_odd += w_odd;
        s0_even += w_even;
        s1_odd += w_odd * table.cost_value[k];
        s1_even += w_even * table.cost_value[k];
        if (w_odd + w_even != 0.0) {
            const vec g = grad(model, support.points[k].x, support.points[k].y, iterate.beta);
            axpy(w_odd, g, s2_odd);
            axpy(w_even, g, s2_even);
        }
    }

    // Averages: odd/even halves over 2^G draws, total over 2^{G+1}.  The
    // normalizations cancel inside each ratio except for the total average,
    // where numerator and denominator share the 1/2^{G+1}, so plain sums are
    // enough everywhere.
    const double s0_total = s0_odd + s0_even;
    const double s1_total = s1_odd + s1_even;

    Attempt a;
    a.degenerate = (s0_total == 0.0) || (s0_odd == 0.0) || (s0_even == 0.0);
    const double delta_lambda = safe_ratio(s1_total, s0_total) -
                                0.5 * (safe_ratio(s1_odd, s0_odd) + safe_ratio(s1_even, s0_even));
    vec delta_beta(d, 0.0);
    for (std::size_t c = 0; c < d; ++c)
        delta_beta[c] = safe_ratio(s2_odd[c] + s2_even[c], s0_total) -
                        0.5 * (safe_ratio(s2_odd[c], s0_odd) + safe_ratio(s2_even[c], s0_even));

    // Base (level-1) term evaluated directly: h1(W0)/h0(W0) = c(W0) and
    // h2(W0)/h0(W0) = grad l(W0) whenever the cost is finite — computing the
    // ratio without exponentials sidesteps underflow entirely.
    double base_cost = 0.0;
    vec base_grad(d, 0.0);
    if (table.finite[w0]) {
        base_cost = table.cost_value[w0];
        base_grad = grad(model, support.points[w0].x, support.points[w0].y, iterate.beta);
    }

    const double p = level_success_probability();
    const double level_prob = p * std::pow(1.0 - p, G);
    a.Lambda = config.delta_star - delta_lambda / level_prob - base_cost;
    a.Gamma = std::move(delta_beta);
    scale(a.Gamma, 1.0 / level_prob);
    axpy(1.0, base_grad, a.Gamma);
    return a;
}

} // namespace

namespace {

GradientSample sample_from_table(const SupportSet& support, AtomTable& table,
                                 const vec& x, double y, const DualIterate& iterate,
                                 const SmoothingConfig& config, const TransportCost& tc,
                                 const LossModel& model, rng_engine& rng,
                                 const MlmcConfig& mlmc) {
    const double p = level_success_probability();
    GradientSample sample;
    for (int tries = 0;; ++tries) {
        const int G = geometric_failures(rng, p);
        Attempt a = one_attempt(support, table, x, y, iterate, config, tc, model, rng, G);
        if (a.degenerate && mlmc.policy == DegeneratePolicy::resample) {
            if (tries >= mlmc.max_resamples)
                throw numeric_error("unbiased_gradient: resample cap reached (degenerate draws)");
            ++sample.resamples;
            continue;
        }
        sample.Lambda = a.Lambda;
        sample.Gamma = std::move(a.Gamma);
        sample.G = G;
        sample.draws_used = (std::size_t{1} << (G + 1)) + 1;
        return sample;
    }
}

} // namespace

GradientSample unbiased_gradient(const SupportSet& support, const vec& x, double y,
                                 const DualIterate& iterate, const SmoothingConfig& config,
                                 const TransportCost& tc, const LossModel& model,
                                 rng_engine& rng, const MlmcConfig& mlmc) {
    if (support.size() == 0) throw data_error("unbiased_gradient: empty support");
    if (!(config.epsilon > 0.0)) throw config_error("unbiased_gradient: epsilon must be > 0");
    if (!(iterate.lambda >= 0.0)) throw config_error("unbiased_gradient: lambda must be >= 0");
    AtomTable table = build_table(support, x, y, iterate, tc, model);
    return sample_from_table(support, table, x, y, iterate, config, tc, model, rng, mlmc);
}

BatchGradient batch_gradient(const SupportSet& support, const vec& x, double y,
                             const DualIterate& iterate, const SmoothingConfig& config,
                             const TransportCost& tc, const LossModel& model,
                             rng_engine& rng, int batch, const MlmcConfig& mlmc) {
    if (batch < 1) throw config_error("batch_gradient: batch must be >= 1");
    if (support.size() == 0) throw data_error("batch_gradient: empty support");
    if (!(config.epsilon > 0.0)) throw config_error("batch_gradient: epsilon must be > 0");
    if (!(iterate.lambda >= 0.0)) throw config_error("batch_gradient: lambda must be >= 0");
    AtomTable table = build_table(support, x, y, iterate, tc, model);
    BatchGradient out;
    out.Gamma.assign(iterate.beta.size(), 0.0);
    for (int b = 0; b < batch; ++b) {
        GradientSample s = sample_from_table(support, table, x, y, iterate, config, tc, model, rng, mlmc);
        out.Lambda += s.Lambda;
        axpy(1.0, s.Gamma, out.Gamma);
        out.draws_used += s.draws_used;
        out.resamples += s.resamples;
    }
    out.Lambda /= batch;
    scale(out.Gamma, 1.0 / batch);
    return out;
}

} // namespace ssldro
