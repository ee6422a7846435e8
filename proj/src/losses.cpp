#include "ssldro/losses.hpp"

#include <cmath>

#include "ssldro/errors.hpp"

namespace ssldro {

namespace {

void check_dims(const LossModel& model, const vec& x, const vec& beta) {
    if (x.size() != beta.size())
        throw data_error("loss: x and beta dimensions differ");
    if (model.dimension != 0 && model.dimension != x.size())
        throw data_error("loss: input dimension does not match the model");
}

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// Logistic sigmoid, stable at both tails.
double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

double loss(const LossModel& model, const vec& x, double y, const vec& beta) {
    check_dims(model, x, beta);
    const double margin = dot(beta, x);
    switch (model.kind) {
    case LossKind::logistic:
        return log1p_exp(-y * margin);
    case LossKind::squared: {
        const double r = y - margin;
        return r * r;
    }
    }
    throw config_error("loss: unknown loss kind");
}

vec grad(const LossModel& model, const vec& x, double y, const vec& beta) {
    check_dims(model, x, beta);
    const double margin = dot(beta, x);
    const double w = grad_scale_from_margin(model, margin, y);
    vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = w * x[i];
    return g;
}

double loss_from_margin(const LossModel& model, double margin, double y) {
    switch (model.kind) {
    case LossKind::logistic:
        return log1p_exp(-y * margin);
    case LossKind::squared: {
        const double r = y - margin;
        return r * r;
    }
    }
    throw config_error("loss_from_margin: unknown loss kind");
}

double grad_scale_from_margin(const LossModel& model, double margin, double y) {
    switch (model.kind) {
    case LossKind::logistic:
        return -y * sigmoid(-y * margin);
    case LossKind::squared:
        return -2.0 * (y - margin);
    }
    throw config_error("grad_scale_from_margin: unknown loss kind");
}

LossValueGrad loss_and_grad(const LossModel& model, const vec& x, double y, const vec& beta) {
    check_dims(model, x, beta);
    const double margin = dot(beta, x);
    LossValueGrad out;
    out.gradient.resize(x.size());
    switch (model.kind) {
    case LossKind::logistic: {
        out.value = log1p_exp(-y * margin);
        const double w = -y * sigmoid(-y * margin);
        for (std::size_t i = 0; i < x.size(); ++i) out.gradient[i] = w * x[i];
        return out;
    }
    case LossKind::squared: {
        const double r = y - margin;
        out.value = r * r;
        const double w = -2.0 * r;
        for (std::size_t i = 0; i < x.size(); ++i) out.gradient[i] = w * x[i];
        return out;
    }
    }
    throw config_error("loss_and_grad: unknown loss kind");
}

} // namespace ssldro
