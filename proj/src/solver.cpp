#include "ssldro/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace ssldro {

std::uint64_t fingerprint(const SupportSet& support) {
    // FNV-1a over the raw bytes of the support layout.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t counts[2] = {support.n_labeled, support.n_unlabeled};
    mix(counts, sizeof counts);
    for (const SupportPoint& p : support.points) {
        mix(&p.y, sizeof p.y);
        const int tag = static_cast<int>(p.tag);
        mix(&tag, sizeof tag);
        if (!p.x.empty()) mix(p.x.data(), p.x.size() * sizeof(double));
    }
    return h;
}

namespace {

void check_smoothing(const SupportSet& support, SmoothingConfig& smoothing) {
    if (support.n_labeled == 0) throw data_error("train: support has no labeled atoms");
    if (!(smoothing.delta_star >= 0.0)) throw config_error("train: delta must be >= 0");
    if (smoothing.epsilon <= 0.0) smoothing.epsilon = default_epsilon(support.size());
}

bool all_finite(const DualIterate& z) {
    if (!std::isfinite(z.lambda)) return false;
    for (double v : z.beta)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

TrainedModel sgd_train(const SupportSet& support, SmoothingConfig smoothing,
                       const SgdConfig& config, const TransportCost& tc,
                       const LossModel& model) {
    check_smoothing(support, smoothing);
    if (!(config.step_a > 0.0) || !(config.step_b >= 0.0))
        throw config_error("sgd_train: step schedule needs a > 0, b >= 0");
    if (config.iterations < 1) throw config_error("sgd_train: need at least one iteration");
    if (config.batch < 1) throw config_error("sgd_train: batch must be >= 1");
    if (config.averaging == Averaging::tail &&
        !(config.tail_fraction > 0.0 && config.tail_fraction <= 1.0))
        throw config_error("sgd_train: tail fraction must lie in (0, 1]");
    if (!(config.lambda0 >= 0.0) || !std::isfinite(config.lambda0))
        throw config_error("sgd_train: lambda0 must be finite and >= 0");

    const std::size_t n = support.n_labeled;
    const std::size_t d = support.dimension();
    const std::size_t K = config.iterations;
    rng_engine rng(config.seed);
    DualIterate it{vec(d, 0.0), config.lambda0};

    const std::size_t tail_len =
        config.averaging == Averaging::tail
            ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                           std::floor(config.tail_fraction * static_cast<double>(K))))
            : 0;
    const std::size_t tail_start = K - tail_len + 1; // iterations are 1-based
    vec beta_sum(d, 0.0);
    double lambda_sum = 0.0;

    TrainedModel out;
    const std::size_t trace_stride =
        config.trace_points > 0 ? std::max<std::size_t>(1, K / config.trace_points) : 0;

    // One minibatch step: B uniform draws from D_n, each contributing either
    // an MLMC gradient sample or the exact smoothed gradient of that sample.
    auto minibatch = [&](std::size_t sample_index) {
        BatchGradient g;
        if (config.gradient == GradientMode::mlmc)
            return batch_gradient(support, support.points[sample_index].x,
                                  support.points[sample_index].y, it, smoothing, tc, model, rng,
                                  config.batch, config.mlmc);
        g.Gamma.assign(d, 0.0);
        for (int b = 0; b < config.batch; ++b) {
            const std::size_t u = b == 0 ? sample_index : uniform_below(rng, n);
            const PhiGradient pg = grad_phi_eps(support, support.points[u].x, support.points[u].y,
                                                it, smoothing, tc, model);
            g.Lambda += pg.dlambda;
            axpy(1.0, pg.dbeta, g.Gamma);
            ++g.draws_used;
        }
        g.Lambda /= config.batch;
        scale(g.Gamma, 1.0 / config.batch);
        return g;
    };

    for (std::size_t k = 1; k <= K; ++k) {
        const std::size_t v = uniform_below(rng, n);
        const BatchGradient g = minibatch(v);
        const double alpha = config.step_a / (config.step_b + static_cast<double>(k));
        axpy(-alpha, g.Gamma, it.beta);
        it.lambda = std::max(0.0, it.lambda - alpha * g.Lambda);
        out.total_draws += g.draws_used;
        out.resamples += g.resamples;
        if (!all_finite(it))
            throw numeric_error("sgd_train: diverged at iteration " + std::to_string(k) +
                                " (non-finite iterate)");
        if (tail_len > 0 && k >= tail_start) {
            axpy(1.0, it.beta, beta_sum);
            lambda_sum += it.lambda;
        }
        if (trace_stride > 0 && (k % trace_stride == 0 || k == K))
            out.trace.emplace_back(k, expected_phi_eps(support, it, smoothing, tc, model));
    }

    if (tail_len > 0) {
        out.beta = beta_sum;
        scale(out.beta, 1.0 / static_cast<double>(tail_len));
        out.lambda = lambda_sum / static_cast<double>(tail_len);
    } else {
        out.beta = it.beta;
        out.lambda = it.lambda;
    }
    out.delta_star = smoothing.delta_star;
    out.epsilon = smoothing.epsilon;
    out.objective =
        expected_phi_eps(support, DualIterate{out.beta, out.lambda}, smoothing, tc, model);
    out.data_fingerprint = fingerprint(support);
    std::ostringstream echo;
    echo << "method=sgd a=" << config.step_a << " b=" << config.step_b << " K=" << K
         << " B=" << config.batch << " seed=" << config.seed
         << " gradient=" << (config.gradient == GradientMode::mlmc ? "mlmc" : "exact")
         << " lambda0=" << config.lambda0 << " averaging="
         << (config.averaging == Averaging::tail ? "tail" : "none")
         << " tail_fraction=" << config.tail_fraction << " epsilon=" << smoothing.epsilon
         << " delta=" << smoothing.delta_star << " cost_q=" << tc.q << " cost_rho=" << tc.rho;
    out.config_echo = echo.str();
    return out;
}

TrainedModel exact_train(const SupportSet& support, SmoothingConfig smoothing,
                         const TransportCost& tc, const LossModel& model,
                         double tolerance, std::size_t max_iterations) {
    check_smoothing(support, smoothing);
    if (support.size() > 100000)
        throw config_error("exact_train: support exceeds the 10^5-atom cap");
    if (!(tolerance > 0.0)) throw config_error("exact_train: tolerance must be > 0");

    const std::size_t d = support.dimension();
    DualIterate z{vec(d, 0.0), 1.0};
    auto objective = [&](const DualIterate& w) {
        return expected_phi_eps(support, w, smoothing, tc, model);
    };
    auto gradient = [&](const DualIterate& w) {
        return expected_grad_phi_eps(support, w, smoothing, tc, model);
    };
    auto step_to = [&](const DualIterate& w, const PhiGradient& g, double step) {
        DualIterate next = w;
        axpy(-step, g.dbeta, next.beta);
        next.lambda = std::max(0.0, next.lambda - step * g.dlambda);
        return next;
    };
    auto dist_sq = [](const DualIterate& a, const DualIterate& b) {
        double s = (a.lambda - b.lambda) * (a.lambda - b.lambda);
        for (std::size_t i = 0; i < a.beta.size(); ++i) {
            const double c = a.beta[i] - b.beta[i];
            s += c * c;
        }
        return s;
    };

    double fz = objective(z);
    PhiGradient g = gradient(z);
    double bb_step = 1.0;
    TrainedModel out;
    bool converged = false;

    // Damped Newton step on the lambda coordinate alone.  Both the
    // lambda-gradient and the lambda-curvature decay exponentially once the
    // atom weights concentrate, so a step length set by the beta block moves
    // lambda by nearly nothing while their ratio keeps advancing it; without
    // this the delta = 0 collapse stalls thousands of iterations short of
    // the gradient tolerance.
    auto newton_lambda = [&]() {
        const double curv = expected_lambda_curvature(support, z, smoothing, tc, model);
        if (!(curv > 0.0) || !std::isfinite(curv)) return false;
        // Cap the move: past an interior optimum the curvature collapses
        // faster than the gradient and the raw ratio can fling lambda far.
        const double raw = g.dlambda / curv;
        const double dl = std::clamp(raw, -(1.0 + 0.5 * z.lambda), 1.0 + 0.5 * z.lambda);
        DualIterate z_new = z;
        double f_new = fz;
        for (double frac = 1.0; frac > 1e-4; frac *= 0.5) {
            z_new.lambda = std::max(0.0, z.lambda - frac * dl);
            if (z_new.lambda == z.lambda) return false;
            f_new = objective(z_new);
            if (f_new <= fz) break;
            f_new = fz;
        }
        if (f_new >= fz || z_new.lambda == z.lambda) return false;
        z.lambda = z_new.lambda;
        fz = f_new;
        g = gradient(z);
        return true;
    };

    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        // Projected-gradient optimality: at lambda = 0 only a negative
        // lambda-derivative counts as violation.
        double pg_sq = 0.0;
        for (double c : g.dbeta) pg_sq += c * c;
        const double pg_lambda = z.lambda > 0.0 ? g.dlambda : std::min(g.dlambda, 0.0);
        pg_sq += pg_lambda * pg_lambda;
        if (std::sqrt(pg_sq) <= tolerance) {
            converged = true;
            break;
        }

        // Advance lambda by Newton whenever it dominates the residual;
        // otherwise leave the joint step to handle it.
        if (std::fabs(pg_lambda) > 0.5 * std::sqrt(pg_sq)) newton_lambda();

        double step = std::clamp(bb_step, 1e-12, 1e8);
        DualIterate z_new = step_to(z, g, step);
        double f_new = objective(z_new);
        while (f_new > fz - 1e-4 / step * dist_sq(z_new, z) && step > 1e-13) {
            step *= 0.5;
            z_new = step_to(z, g, step);
            f_new = objective(z_new);
        }
        const PhiGradient g_new = gradient(z_new);

        // Barzilai-Borwein step for the next round.
        double ss = dist_sq(z_new, z);
        double sy = (z_new.lambda - z.lambda) * (g_new.dlambda - g.dlambda);
        for (std::size_t i = 0; i < d; ++i)
            sy += (z_new.beta[i] - z.beta[i]) * (g_new.dbeta[i] - g.dbeta[i]);
        bb_step = sy > 1e-300 ? ss / sy : 1.0;

        z = std::move(z_new);
        fz = f_new;
        g = g_new;
        if (!all_finite(z))
            throw numeric_error("exact_train: diverged at iteration " + std::to_string(iter));
        out.trace.emplace_back(iter, fz);
    }
    if (!converged)
        throw numeric_error("exact_train: iteration cap reached before the gradient tolerance");

    out.beta = z.beta;
    out.lambda = z.lambda;
    out.delta_star = smoothing.delta_star;
    out.epsilon = smoothing.epsilon;
    out.objective = fz;
    out.data_fingerprint = fingerprint(support);
    std::ostringstream echo;
    echo << "method=exact tolerance=" << tolerance << " epsilon=" << smoothing.epsilon
         << " delta=" << smoothing.delta_star << " cost_q=" << tc.q << " cost_rho=" << tc.rho;
    out.config_echo = echo.str();
    return out;
}

namespace {

double validation_metric(const LabeledDataset& holdout, const vec& beta, CvMetric metric,
                         const LossModel& model) {
    switch (metric) {
    case CvMetric::log_loss:
        return model.kind == LossKind::logistic ? mean_log_loss(holdout, beta)
                                                : mean_squared_error(holdout, beta);
    case CvMetric::accuracy:
        if (model.kind != LossKind::logistic)
            throw config_error("cross_validate_delta: accuracy metric needs the logistic model");
        return 1.0 - accuracy(holdout, beta); // minimized like a loss
    }
    throw config_error("cross_validate_delta: unknown metric");
}

} // namespace

CvResult cross_validate_delta(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                              std::vector<double> delta_grid, const CvConfig& config,
                              const TransportCost& tc, const LossModel& model) {
    if (config.folds < 2) throw config_error("cross_validate_delta: need at least 2 folds");
    if (delta_grid.empty()) throw config_error("cross_validate_delta: empty delta grid");
    std::sort(delta_grid.begin(), delta_grid.end());
    delta_grid.erase(std::unique(delta_grid.begin(), delta_grid.end()), delta_grid.end());
    for (double delta : delta_grid)
        if (!(delta >= 0.0)) throw config_error("cross_validate_delta: negative delta in grid");
    const std::size_t k = config.folds;
    if (labeled.size() < k)
        throw data_error("cross_validate_delta: fewer labeled examples than folds");

    // Fold assignment: stratified by label for classification so tiny labeled
    // sets cannot produce label-empty training parts.
    rng_engine rng(config.seed);
    std::vector<std::vector<std::size_t>> folds(k);
    if (model.kind == LossKind::logistic) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < labeled.size(); ++i)
            (labeled[i].y > 0 ? pos : neg).push_back(i);
        shuffle(pos, rng);
        shuffle(neg, rng);
        std::size_t next = 0;
        for (std::size_t i : pos) folds[next++ % k].push_back(i);
        for (std::size_t i : neg) folds[next++ % k].push_back(i);
    } else {
        std::vector<std::size_t> order(labeled.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
    }
    for (const auto& fold : folds)
        if (fold.empty()) throw data_error("cross_validate_delta: a fold came out empty");

    CvResult result;
    for (double delta : delta_grid) {
        CvRow row;
        row.delta = delta;
        for (std::size_t f = 0; f < k; ++f) {
            LabeledDataset train, holdout;
            std::vector<char> in_fold(labeled.size(), 0);
            for (std::size_t i : folds[f]) in_fold[i] = 1;
            for (std::size_t i = 0; i < labeled.size(); ++i)
                (in_fold[i] ? holdout : train).push_back(labeled[i]);
            const SupportSet support = build_support(train, unlabeled);
            const TrainedModel trained =
                exact_train(support, SmoothingConfig{config.epsilon, delta}, tc, model,
                            config.train_tolerance, config.train_iterations);
            row.fold_values.push_back(validation_metric(holdout, trained.beta, config.metric, model));
        }
        const double mean = std::accumulate(row.fold_values.begin(), row.fold_values.end(), 0.0) /
                            static_cast<double>(k);
        double var = 0.0;
        for (double v : row.fold_values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(k - 1);
        row.mean = mean;
        row.stderr_mean = std::sqrt(var / static_cast<double>(k));
        result.table.push_back(std::move(row));
    }

    // Argmin with the one-standard-error rule: smallest delta whose mean is
    // within one SE of the best mean.
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i)
        if (result.table[i].mean < result.table[best].mean) best = i;
    const double threshold = result.table[best].mean + result.table[best].stderr_mean;
    for (const CvRow& row : result.table) {
        if (row.mean <= threshold) {
            result.delta_best = row.delta;
            return result;
        }
    }
    result.delta_best = result.table[best].delta; // unreachable, but explicit
    return result;
}

// ---------------------------------------------------------------------------
// Norm-penalized logistic baseline: FISTA with the proximal maps of
// delta * ||.||_p for p in {1, 2, inf}.
// ---------------------------------------------------------------------------

namespace {

// Euclidean projection onto the l1 ball of the given radius.
vec project_l1_ball(const vec& v, double radius) {
    double l1 = norm1(v);
    if (l1 <= radius) return v;
    vec abs_sorted(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) abs_sorted[i] = std::fabs(v[i]);
    std::sort(abs_sorted.begin(), abs_sorted.end(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < abs_sorted.size(); ++j) {
        cumulative += abs_sorted[j];
        const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
        if (abs_sorted[j] - candidate > 0.0)
            theta = candidate;
        else
            break;
    }
    vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::max(std::fabs(v[i]) - theta, 0.0);
        out[i] = v[i] < 0 ? -mag : mag;
    }
    return out;
}

vec prox_norm(const vec& v, double tau, double p_norm) {
    if (tau <= 0.0) return v;
    vec out(v.size());
    if (p_norm == 1.0) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double mag = std::max(std::fabs(v[i]) - tau, 0.0);
            out[i] = v[i] < 0 ? -mag : mag;
        }
        return out;
    }
    if (p_norm == 2.0) {
        const double nrm = norm2(v);
        const double factor = nrm > 0.0 ? std::max(0.0, 1.0 - tau / nrm) : 0.0;
        out = v;
        scale(out, factor);
        return out;
    }
    // p = inf: Moreau decomposition against the l1 ball of radius tau.
    const vec proj = project_l1_ball(v, tau);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - proj[i];
    return out;
}

} // namespace

TrainedModel regularized_logistic_baseline(const LabeledDataset& labeled, double delta_bar,
                                           double p_norm) {
    if (labeled.empty()) throw data_error("regularized_logistic_baseline: empty dataset");
    if (!(delta_bar >= 0.0)) throw config_error("regularized_logistic_baseline: penalty must be >= 0");
    if (p_norm != 1.0 && p_norm != 2.0 && !std::isinf(p_norm))
        throw config_error("regularized_logistic_baseline: p must be 1, 2, or inf");
    const std::size_t d = labeled[0].x.size();
    const std::size_t n = labeled.size();
    const LossModel model{LossKind::logistic, d};

    auto smooth_value = [&](const vec& beta) {
        double s = 0.0;
        for (const auto& ex : labeled) s += loss(model, ex.x, ex.y, beta);
        return s / static_cast<double>(n);
    };
    auto smooth_grad = [&](const vec& beta) {
        vec g(d, 0.0);
        for (const auto& ex : labeled) axpy(1.0, grad(model, ex.x, ex.y, beta), g);
        scale(g, 1.0 / static_cast<double>(n));
        return g;
    };
    auto total_value = [&](const vec& beta) {
        return smooth_value(beta) + delta_bar * norm_q(beta, p_norm);
    };

    // Lipschitz bound for the logistic gradient: (1/4) mean ||x||^2.
    double lips = 0.0;
    for (const auto& ex : labeled) lips += dot(ex.x, ex.x);
    lips = std::max(lips / (4.0 * static_cast<double>(n)), 1e-12);
    const double step = 1.0 / lips;

    vec beta(d, 0.0), momentum = beta;
    double t = 1.0;
    double f_best = total_value(beta);
    const double tol = 1e-8;
    std::size_t iter = 0;
    const std::size_t cap = 500000;
    TrainedModel out;
    for (; iter < cap; ++iter) {
        vec g = smooth_grad(momentum);
        vec candidate = momentum;
        axpy(-step, g, candidate);
        candidate = prox_norm(candidate, step * delta_bar, p_norm);

        // Gradient-mapping residual at the momentum point.
        double res = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            res = std::max(res, std::fabs(momentum[i] - candidate[i]));
        res /= step;

        const double f_candidate = total_value(candidate);
        if (f_candidate > f_best + 1e-15) {
            // Function restart: drop momentum and retry from the best point.
            momentum = beta;
            t = 1.0;
            const vec g2 = smooth_grad(momentum);
            vec plain = momentum;
            axpy(-step, g2, plain);
            plain = prox_norm(plain, step * delta_bar, p_norm);
            const double f_plain = total_value(plain);
            double res2 = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                res2 = std::max(res2, std::fabs(momentum[i] - plain[i]));
            res2 /= step;
            beta = plain;
            f_best = f_plain;
            momentum = beta;
            if (res2 <= tol) break;
            continue;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        vec next_momentum = candidate;
        for (std::size_t i = 0; i < d; ++i)
            next_momentum[i] += (t - 1.0) / t_next * (candidate[i] - beta[i]);
        beta = std::move(candidate);
        f_best = f_candidate;
        momentum = std::move(next_momentum);
        t = t_next;
        if (res <= tol) break;
    }

    out.beta = beta;
    out.lambda = 0.0;
    out.delta_star = delta_bar;
    out.objective = f_best;
    std::ostringstream echo;
    echo << "method=penalized-logistic p=" << p_norm << " delta_bar=" << delta_bar
         << " iterations=" << iter;
    out.config_echo = echo.str();
    return out;
}

double mean_log_loss(const LabeledDataset& data, const vec& beta) {
    if (data.empty()) throw data_error("mean_log_loss: empty dataset");
    const LossModel model{LossKind::logistic, beta.size()};
    double s = 0.0;
    for (const auto& ex : data) s += loss(model, ex.x, ex.y, beta);
    return s / static_cast<double>(data.size());
}

double mean_squared_error(const LabeledDataset& data, const vec& beta) {
    if (data.empty()) throw data_error("mean_squared_error: empty dataset");
    const LossModel model{LossKind::squared, beta.size()};
    double s = 0.0;
    for (const auto& ex : data) s += loss(model, ex.x, ex.y, beta);
    return s / static_cast<double>(data.size());
}

double accuracy(const LabeledDataset& data, const vec& beta) {
    if (data.empty()) throw data_error("accuracy: empty dataset");
    std::size_t hits = 0;
    for (const auto& ex : data) {
        const double sign = dot(beta, ex.x) >= 0.0 ? 1.0 : -1.0; // sign(0) = +1
        if (sign == ex.y) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

} // namespace ssldro
