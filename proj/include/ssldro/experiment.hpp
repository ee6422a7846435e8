#pragma once

#include <cstdint>
#include <vector>

#include "ssldro/dataset.hpp"
#include "ssldro/losses.hpp"
#include "ssldro/solver.hpp"
#include "ssldro/transport.hpp"

namespace ssldro {

// Multi-seed experiment: for each seed, split the dataset, optionally pick
// the radius by cross-validation on the training part, train, and score the
// held-out test part.  Seeds run in parallel (capped by SSL_DRO_THREADS);
// results are aggregated in seed order so the report is deterministic.
struct ExperimentConfig {
    SplitSpec split;
    TransportCost cost;
    LossKind loss = LossKind::logistic;
    bool standardize = true;

    // Radius: fixed delta, or per-seed cross-validation over delta_grid.
    double delta = 0.0;
    bool cv_select = false;
    std::vector<double> delta_grid;
    CvConfig cv;

    double epsilon = 0.0; // <= 0: default smoothing for the support size

    // Solver: exact first-order training by default; the stochastic path
    // uses sgd (seeded per experiment seed).
    bool use_exact = true;
    double exact_tolerance = 1e-6;
    std::size_t exact_iterations = 50000;
    SgdConfig sgd;

    std::vector<std::uint64_t> seeds;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    double delta = 0.0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0; // logistic only; 0 for squared loss
    TrainedModel model;
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation across seeds
};

struct ExperimentResult {
    std::vector<SeedOutcome> rows; // one per seed, in input order
    Aggregate train_loss;
    Aggregate test_loss;
    Aggregate test_accuracy;
    Aggregate delta;
};

// Parallelism cap: SSL_DRO_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t thread_budget();

SeedOutcome run_seed(const LabeledDataset& data, const ExperimentConfig& config,
                     std::uint64_t seed);
ExperimentResult run_experiment(const LabeledDataset& data, const ExperimentConfig& config);

} // namespace ssldro
