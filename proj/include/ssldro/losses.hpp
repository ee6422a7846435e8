// Loss models l(x, y, beta) and their beta-gradients: logistic loss for
// classification, squared loss for linear regression.  Both are smooth and
// convex in beta for every fixed (x, y).

#pragma once

#include "ssldro/vecops.hpp"

namespace ssldro {

enum class LossKind { logistic, squared };

struct LossModel {
    LossKind kind = LossKind::logistic;
    std::size_t dimension = 0;
};

// logistic: log(1 + exp(-y * beta.x)), overflow-safe for large margins.
// squared:  (y - beta.x)^2.
double loss(const LossModel& model, const vec& x, double y, const vec& beta);

// logistic: -y * x * sigmoid(-y * beta.x).
// squared:  -2 * (y - beta.x) * x.
vec grad(const LossModel& model, const vec& x, double y, const vec& beta);

// Margin-based forms: both losses depend on (x, beta) only through the
// margin beta.x, and both gradients are (scalar) * x.  Hot loops that scan
// many atoms against one beta compute the margin once and accumulate the
// scalar, avoiding a second dot product and a temporary per atom.
double loss_from_margin(const LossModel& model, double margin, double y);
double grad_scale_from_margin(const LossModel& model, double margin, double y);

// Both at once; the smoothed-objective gradients need the pair anyway.
struct LossValueGrad {
    double value = 0.0;
    vec gradient;
};

LossValueGrad loss_and_grad(const LossModel& model, const vec& x, double y, const vec& beta);

} // namespace ssldro
