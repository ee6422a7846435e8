// Randomized multilevel Monte Carlo estimator of the smoothed-objective
// gradients: draw a geometric level G, then 2^{G+1} + 1 uniform support
// draws, and debias the even/odd sub-sample ratio differences by the level
// probability.  Conditionally on the sample (x, y), the outputs (Lambda,
// Gamma) are unbiased for (d/dlambda phi_eps, grad_beta phi_eps).
//
// Ratio convention: every ratio of sub-sample averages is defined as 0 when
// its denominator average is exactly 0 (an all-flipped-draws event has
// positive probability whenever unlabeled replicas exist).  This keeps each
// term a plain function of iid draws, so the level telescope — and with it
// exact unbiasedness — survives; rejection-resampling would tilt the level
// law.  A resample policy is provided for comparison.

#pragma once

#include <cstdint>

#include "ssldro/dro.hpp"
#include "ssldro/rng.hpp"

namespace ssldro {

// Success probability of the level distribution: 1 - 2^{-3/2}.
double level_success_probability();

// Analytic E[2^{G+1} + 1] under Geometric(level_success_probability()).
double expected_draws_per_sample();

enum class DegeneratePolicy { zero, resample };

struct MlmcConfig {
    DegeneratePolicy policy = DegeneratePolicy::zero;
    int max_resamples = 10000; // cap for the resample policy
};

struct HValues {
    double h0 = 0.0; // exp((loss - lambda*cost - shift)/epsilon); 0 on label flip
    double h1 = 0.0; // h0 * cost, with h0 * inf := 0
    vec h2;          // h0 * grad_beta loss
};

// The common `shift` must be shared across all draws of one estimator call;
// the estimator depends only on ratios, which are shift-invariant.
HValues h_values(const SupportPoint& w, const vec& x, double y,
                 const DualIterate& iterate, const SmoothingConfig& config,
                 const TransportCost& tc, const LossModel& model, double shift = 0.0);

struct GradientSample {
    double Lambda = 0.0;
    vec Gamma;
    int G = 0;
    std::size_t draws_used = 0; // 2^{G+1} + 1
    int resamples = 0;          // nonzero only under DegeneratePolicy::resample
};

GradientSample unbiased_gradient(const SupportSet& support, const vec& x, double y,
                                 const DualIterate& iterate, const SmoothingConfig& config,
                                 const TransportCost& tc, const LossModel& model,
                                 rng_engine& rng, const MlmcConfig& mlmc = {});

// Average of `batch` independent GradientSamples (variance control).
struct BatchGradient {
    double Lambda = 0.0;
    vec Gamma;
    std::size_t draws_used = 0;
    int resamples = 0;
};

BatchGradient batch_gradient(const SupportSet& support, const vec& x, double y,
                             const DualIterate& iterate, const SmoothingConfig& config,
                             const TransportCost& tc, const LossModel& model,
                             rng_engine& rng, int batch, const MlmcConfig& mlmc = {});

} // namespace ssldro
