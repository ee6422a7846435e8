#include "ssldro/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "ssldro/errors.hpp"

namespace ssldro {

std::size_t thread_budget() {
    if (const char* env = std::getenv("SSL_DRO_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

SeedOutcome run_seed(const LabeledDataset& data, const ExperimentConfig& config,
                     std::uint64_t seed) {
    SplitResult parts = split(data, config.split, seed);

    if (config.standardize) {
        const Standardizer stz = fit_standardizer(parts.labeled, parts.unlabeled);
        stz.apply_inplace(parts.labeled);
        stz.apply_inplace(parts.unlabeled);
        stz.apply_inplace(parts.test);
    }

    const std::size_t d = parts.labeled.empty() ? 0 : parts.labeled[0].x.size();
    const LossModel model{config.loss, d};

    SeedOutcome out;
    out.seed = seed;
    out.delta = config.delta;
    if (config.cv_select) {
        CvConfig cv = config.cv;
        cv.seed = seed;
        cv.epsilon = config.epsilon;
        const CvResult cvr = cross_validate_delta(parts.labeled, parts.unlabeled,
                                                  config.delta_grid, cv, config.cost, model);
        out.delta = cvr.delta_best;
    }

    const SupportSet support = build_support(parts.labeled, parts.unlabeled);
    const SmoothingConfig smoothing{config.epsilon, out.delta};
    if (config.use_exact) {
        out.model = exact_train(support, smoothing, config.cost, model,
                                config.exact_tolerance, config.exact_iterations);
    } else {
        SgdConfig sgd = config.sgd;
        sgd.seed = seed;
        out.model = sgd_train(support, smoothing, sgd, config.cost, model);
    }

    if (config.loss == LossKind::logistic) {
        out.train_loss = mean_log_loss(parts.labeled, out.model.beta);
        out.test_loss = mean_log_loss(parts.test, out.model.beta);
        out.test_accuracy = accuracy(parts.test, out.model.beta);
    } else {
        out.train_loss = mean_squared_error(parts.labeled, out.model.beta);
        out.test_loss = mean_squared_error(parts.test, out.model.beta);
        out.test_accuracy = 0.0;
    }
    return out;
}

namespace {

Aggregate aggregate_of(const std::vector<SeedOutcome>& rows, double SeedOutcome::*field) {
    Aggregate agg;
    const double count = static_cast<double>(rows.size());
    for (const auto& row : rows) agg.mean += row.*field;
    agg.mean /= count;
    if (rows.size() > 1) {
        double ss = 0.0;
        for (const auto& row : rows) {
            const double dev = row.*field - agg.mean;
            ss += dev * dev;
        }
        agg.sd = std::sqrt(ss / (count - 1.0));
    }
    return agg;
}

} // namespace

ExperimentResult run_experiment(const LabeledDataset& data, const ExperimentConfig& config) {
    if (config.seeds.empty()) throw config_error("run_experiment: no seeds given");

    ExperimentResult result;
    result.rows.resize(config.seeds.size());
    const std::size_t workers = std::min(thread_budget(), config.seeds.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size()) return;
            try {
                result.rows[i] = run_seed(data, config, config.seeds[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    result.train_loss = aggregate_of(result.rows, &SeedOutcome::train_loss);
    result.test_loss = aggregate_of(result.rows, &SeedOutcome::test_loss);
    result.test_accuracy = aggregate_of(result.rows, &SeedOutcome::test_accuracy);
    result.delta = aggregate_of(result.rows, &SeedOutcome::delta);
    return result;
}

} // namespace ssldro
