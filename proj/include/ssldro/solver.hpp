// Training: the projected stochastic-gradient recursion (per-sample
// gradients from the MLMC estimator or computed exactly), a deterministic
// full-gradient solver for small instances, cross-validation over the
// transport budget, and the norm-penalized logistic baseline.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssldro/dataset.hpp"
#include "ssldro/dro.hpp"
#include "ssldro/mlmc.hpp"

namespace ssldro {

enum class Averaging { none, tail };

// Per-sample gradient source.  `mlmc` is the randomized multilevel
// estimator, whose cost per sample is independent of the support size
// but whose variance grows steeply once the smoothed weights concentrate
// on a single atom (large lambda, small epsilon).  `exact` evaluates the
// full smoothed gradient of the drawn sample over the whole support --
// O(|X_N|) per sample -- leaving data sampling as the only noise source.
enum class GradientMode { mlmc, exact };

struct SgdConfig {
    double step_a = 1.0;            // alpha_k = step_a / (step_b + k)
    double step_b = 10.0;
    std::size_t iterations = 50000; // K
    int batch = 8;                  // B gradient samples averaged per step
    Averaging averaging = Averaging::tail;
    double tail_fraction = 0.25;    // portion of final iterates averaged
    std::uint64_t seed = 0;
    GradientMode gradient = GradientMode::mlmc;
    MlmcConfig mlmc{};
    int trace_points = 32;          // objective trace resolution (0 = off)
    // Starting multiplier.  At delta = 0 the dual multiplier has no finite
    // optimum (the objective keeps improving as lambda grows while its
    // lambda-derivative decays exponentially), so a cold start cannot reach
    // the collapse region under a decaying step schedule; warm-start lambda0
    // above the loss's transport slope instead.
    double lambda0 = 1.0;
};

struct TrainedModel {
    vec beta;
    double lambda = 0.0;
    double delta_star = 0.0;
    double epsilon = 0.0;
    double objective = 0.0; // final smoothed objective E_Pn[phi_eps]
    std::vector<std::pair<std::size_t, double>> trace; // (iteration, objective)
    std::string config_echo;
    std::uint64_t data_fingerprint = 0;
    std::size_t total_draws = 0; // support draws consumed (sgd only; batch size per step in exact mode)
    int resamples = 0;           // degenerate-draw resamples (resample policy)
};

// FNV-1a over the raw support bytes; recorded in TrainedModel for audit.
std::uint64_t fingerprint(const SupportSet& support);

// Projected SGD on (beta, lambda in [0, inf)): beta_{k+1} = beta_k - alpha Gamma,
// lambda_{k+1} = (lambda_k - alpha Lambda)^+, per-sample gradients per
// config.gradient (MLMC estimator or exact smoothed gradient).
// smoothing.epsilon <= 0 selects the default temperature for this support.
TrainedModel sgd_train(const SupportSet& support, SmoothingConfig smoothing,
                       const SgdConfig& config, const TransportCost& tc,
                       const LossModel& model);

// Deterministic convex descent (projected Barzilai-Borwein with Armijo
// backtracking) on the exact smoothed objective; stops at projected-gradient
// norm <= tolerance.
TrainedModel exact_train(const SupportSet& support, SmoothingConfig smoothing,
                         const TransportCost& tc, const LossModel& model,
                         double tolerance = 1e-6, std::size_t max_iterations = 50000);

enum class CvMetric { log_loss, accuracy };

struct CvConfig {
    std::size_t folds = 5;
    CvMetric metric = CvMetric::log_loss;
    double epsilon = 0.0; // 0 = default temperature per fold support
    std::uint64_t seed = 0;
    double train_tolerance = 1e-6;
    std::size_t train_iterations = 20000;
};

struct CvRow {
    double delta = 0.0;
    double mean = 0.0; // mean validation metric (loss-like: accuracy enters as 1 - acc)
    double stderr_mean = 0.0;
    std::vector<double> fold_values;
};

struct CvResult {
    double delta_best = 0.0;
    std::vector<CvRow> table;
};

// k-fold CV on the labeled data only; the unlabeled set joins every fold's
// support.  Stratified by label for the logistic model.  Picks the argmin of
// the mean metric with one-standard-error tie-breaking toward smaller delta.
CvResult cross_validate_delta(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                              std::vector<double> delta_grid, const CvConfig& config,
                              const TransportCost& tc, const LossModel& model);

// Minimize mean logistic loss + delta_bar * ||beta||_p for p in {1, 2, inf}
// by proximal gradient (FISTA) to tolerance 1e-8.  The returned model stores
// delta_bar in delta_star and keeps lambda = 0.
TrainedModel regularized_logistic_baseline(const LabeledDataset& labeled, double delta_bar,
                                           double p_norm);

// Shared evaluation metrics.  sign(0) counts as +1.
double mean_log_loss(const LabeledDataset& data, const vec& beta);
double mean_squared_error(const LabeledDataset& data, const vec& beta);
double accuracy(const LabeledDataset& data, const vec& beta);

} // namespace ssldro
