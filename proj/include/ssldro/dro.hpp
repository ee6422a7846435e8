// The per-sample dual objective phi(x,y,beta,lambda) = max over support
// atoms of {loss - lambda*cost} + lambda*delta, its log-sum-exp smoothing
// phi_eps, exact gradients of the smoothed objective, the exact inner
// worst-case LP on small instances, and the scalar dual minimization that
// certifies it.
//
// Convention for infinite costs: an atom with c(u,(x,y)) = +inf is excluded
// from the max / the exponential sum for every lambda >= 0 (its smoothed
// weight is exactly zero at any temperature), which keeps phi the pointwise
// limit of phi_eps and keeps lambda -> phi continuous at 0.

#pragma once

#include "ssldro/dataset.hpp"
#include "ssldro/losses.hpp"
#include "ssldro/transport.hpp"

namespace ssldro {

struct DualIterate {
    vec beta;
    double lambda = 0.0; // must stay >= 0; solvers project
};

struct SmoothingConfig {
    double epsilon = 0.0;     // temperature, > 0
    double delta_star = 0.0;  // transport budget, >= 0
};

// Default temperature 1/log(|X_N|) with a floor of 1e-4.
double default_epsilon(std::size_t support_size);

double phi(const SupportSet& support, const vec& x, double y,
           const DualIterate& iterate, double delta_star,
           const TransportCost& tc, const LossModel& model);

double phi_eps(const SupportSet& support, const vec& x, double y,
               const DualIterate& iterate, const SmoothingConfig& config,
               const TransportCost& tc, const LossModel& model);

struct PhiGradient {
    vec dbeta;
    double dlambda = 0.0;
};

PhiGradient grad_phi_eps(const SupportSet& support, const vec& x, double y,
                         const DualIterate& iterate, const SmoothingConfig& config,
                         const TransportCost& tc, const LossModel& model);

// Second lambda-derivative of phi_eps: Var_w[cost] / epsilon under the
// softmax atom weights w.  Nonnegative (phi_eps is convex in lambda), and
// it decays at the same exponential rate as the lambda-gradient once the
// weights concentrate on a single atom -- the ratio of the two stays O(1),
// which is what makes a Newton step on lambda effective where a gradient
// step stalls.
double lambda_curvature_phi_eps(const SupportSet& support, const vec& x, double y,
                                const DualIterate& iterate, const SmoothingConfig& config,
                                const TransportCost& tc, const LossModel& model);

// Averages over the labeled prefix of the support (the empirical sample).
double empirical_risk(const SupportSet& support, const vec& beta, const LossModel& model);
double expected_phi(const SupportSet& support, const DualIterate& iterate, double delta_star,
                    const TransportCost& tc, const LossModel& model);
double expected_phi_eps(const SupportSet& support, const DualIterate& iterate,
                        const SmoothingConfig& config, const TransportCost& tc,
                        const LossModel& model);
PhiGradient expected_grad_phi_eps(const SupportSet& support, const DualIterate& iterate,
                                  const SmoothingConfig& config, const TransportCost& tc,
                                  const LossModel& model);
double expected_lambda_curvature(const SupportSet& support, const DualIterate& iterate,
                                 const SmoothingConfig& config, const TransportCost& tc,
                                 const LossModel& model);

// Exact solution of the inner worst-case maximization over distributions on
// the support: maximize E_P[loss] subject to the transportation constraints
// (column sums 1/n against the labeled sample, budget sum(c*pi) <= delta).
// Dense LP on at most |X_N| * n <= 10^4 variables.
struct WorstCaseDistribution {
    TransportPlan plan;          // source = support index u, target = labeled index v
    std::vector<double> marginal; // P*(u), aligned with the support
    double value = 0.0;          // attained E_{P*}[loss]
    double budget_used = 0.0;    // sum of cost * mass
};

WorstCaseDistribution inner_max_exact(const SupportSet& support, const vec& beta,
                                      double delta_star, const TransportCost& tc,
                                      const LossModel& model);

// Minimize the convex scalar dual lambda -> lambda*delta + mean_v max_u
// {loss(u) - lambda c(u,v)} over lambda >= 0 (bracket doubling + golden
// section).  By strong duality the value matches inner_max_exact.
struct DualValue {
    double value = 0.0;
    double lambda_opt = 0.0;
};

DualValue dual_value(const SupportSet& support, const vec& beta, double delta_star,
                     const TransportCost& tc, const LossModel& model);

} // namespace ssldro
