// Python bindings for the main operations: robust training (stochastic and
// exact), the smoothed dual objective and its gradients, worst-case
// distributions, profile-function values, and radius selection.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssldro/dataset.hpp"
#include "ssldro/dro.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/losses.hpp"
#include "ssldro/rwp.hpp"
#include "ssldro/solver.hpp"
#include "ssldro/transport.hpp"

namespace py = pybind11;

namespace {

ssldro::LossKind loss_kind(const std::string& name) {
    if (name == "logistic") return ssldro::LossKind::logistic;
    if (name == "squared") return ssldro::LossKind::squared;
    throw ssldro::config_error("unknown loss '" + name + "' (expected logistic or squared)");
}

ssldro::LabeledDataset make_labeled(const std::vector<ssldro::vec>& x,
                                    const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ssldro::config_error("x and y have different lengths");
    ssldro::LabeledDataset out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back({x[i], y[i]});
    return out;
}

ssldro::UnlabeledDataset make_unlabeled(const std::vector<ssldro::vec>& x) {
    ssldro::UnlabeledDataset out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back({row});
    return out;
}

py::dict model_dict(const ssldro::TrainedModel& model) {
    py::dict out;
    out["beta"] = model.beta;
    out["lambda"] = model.lambda;
    out["delta"] = model.delta_star;
    out["epsilon"] = model.epsilon;
    out["objective"] = model.objective;
    out["fingerprint"] = model.data_fingerprint;
    out["total_draws"] = model.total_draws;
    out["config"] = model.config_echo;
    return out;
}

} // namespace

PYBIND11_MODULE(_ssldro, m) {
    m.doc() = "semi-supervised distributionally robust training toolkit";

    py::register_exception<ssldro::config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ssldro::data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<ssldro::numeric_error>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "train",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& unlabeled, double delta, const std::string& loss,
           double cost_q, double cost_rho, double epsilon, bool exact, std::size_t iterations,
           int batch, std::uint64_t seed) {
            const auto labeled = make_labeled(x, y);
            const auto support = ssldro::build_support(labeled, make_unlabeled(unlabeled));
            const ssldro::LossModel model{loss_kind(loss), support.dimension()};
            const ssldro::TransportCost tc{cost_q, cost_rho};
            const ssldro::SmoothingConfig smoothing{epsilon, delta};
            ssldro::TrainedModel trained;
            if (exact) {
                trained = ssldro::exact_train(support, smoothing, tc, model);
            } else {
                ssldro::SgdConfig cfg;
                cfg.iterations = iterations;
                cfg.batch = batch;
                cfg.seed = seed;
                trained = ssldro::sgd_train(support, smoothing, cfg, tc, model);
            }
            return model_dict(trained);
        },
        py::arg("x"), py::arg("y"), py::arg("unlabeled") = std::vector<ssldro::vec>{},
        py::arg("delta") = 0.0, py::arg("loss") = "logistic", py::arg("cost_q") = 2.0,
        py::arg("cost_rho") = 1.0, py::arg("epsilon") = 0.0, py::arg("exact") = false,
        py::arg("iterations") = 50000, py::arg("batch") = 8, py::arg("seed") = 0,
        "Train a robust linear model; returns a dict with beta, lambda, objective.");

    m.def(
        "evaluate",
        [](const ssldro::vec& beta, const std::vector<ssldro::vec>& x,
           const std::vector<double>& y, const std::string& loss) {
            const auto data = make_labeled(x, y);
            py::dict out;
            if (loss_kind(loss) == ssldro::LossKind::logistic) {
                out["log_loss"] = ssldro::mean_log_loss(data, beta);
                out["accuracy"] = ssldro::accuracy(data, beta);
            } else {
                out["mse"] = ssldro::mean_squared_error(data, beta);
            }
            return out;
        },
        py::arg("beta"), py::arg("x"), py::arg("y"), py::arg("loss") = "logistic",
        "Mean metrics of a parameter vector on a labeled sample.");

    m.def(
        "dual_value",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& unlabeled, const ssldro::vec& beta, double delta,
           const std::string& loss, double cost_q, double cost_rho) {
            const auto support = ssldro::build_support(make_labeled(x, y),
                                                       make_unlabeled(unlabeled));
            const ssldro::LossModel model{loss_kind(loss), support.dimension()};
            const auto dual =
                ssldro::dual_value(support, beta, delta, {cost_q, cost_rho}, model);
            py::dict out;
            out["value"] = dual.value;
            out["lambda"] = dual.lambda_opt;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("unlabeled"), py::arg("beta"), py::arg("delta"),
        py::arg("loss") = "logistic", py::arg("cost_q") = 2.0, py::arg("cost_rho") = 1.0,
        "Exact worst-case expected loss at beta via the one-dimensional dual.");

    m.def(
        "worst_case",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& unlabeled, const ssldro::vec& beta, double delta,
           const std::string& loss, double cost_q, double cost_rho) {
            const auto support = ssldro::build_support(make_labeled(x, y),
                                                       make_unlabeled(unlabeled));
            const ssldro::LossModel model{loss_kind(loss), support.dimension()};
            const auto wc =
                ssldro::inner_max_exact(support, beta, delta, {cost_q, cost_rho}, model);
            py::list plan;
            for (const auto& entry : wc.plan.entries) {
                py::dict row;
                row["u"] = entry.source;
                row["v"] = entry.target;
                row["mass"] = entry.mass;
                plan.append(row);
            }
            py::dict out;
            out["value"] = wc.value;
            out["budget_used"] = wc.budget_used;
            out["plan"] = plan;
            out["marginal"] = wc.marginal;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("unlabeled"), py::arg("beta"), py::arg("delta"),
        py::arg("loss") = "logistic", py::arg("cost_q") = 2.0, py::arg("cost_rho") = 1.0,
        "Adversarial distribution attaining the worst-case expected loss.");

    m.def(
        "rwp_value",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& extra, const ssldro::vec& beta_star) {
            ssldro::RwpInstance instance;
            instance.labeled = make_labeled(x, y);
            instance.extra_predictors = extra;
            instance.beta_star = beta_star;
            return ssldro::rwp_value(instance);
        },
        py::arg("x"), py::arg("y"), py::arg("extra"), py::arg("beta_star"),
        "Profile-function value of a hypothesized least-squares parameter.");

    m.def(
        "select_delta_cv",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& unlabeled, const std::vector<double>& grid,
           std::size_t folds, const std::string& loss, double cost_q, double cost_rho,
           std::uint64_t seed) {
            const auto labeled = make_labeled(x, y);
            const std::size_t d = labeled.empty() ? 0 : labeled[0].x.size();
            const ssldro::LossModel model{loss_kind(loss), d};
            ssldro::CvConfig cv;
            cv.folds = folds;
            cv.seed = seed;
            const auto result = ssldro::cross_validate_delta(
                labeled, make_unlabeled(unlabeled), grid, cv, {cost_q, cost_rho}, model);
            py::list table;
            for (const auto& row : result.table) {
                py::dict r;
                r["delta"] = row.delta;
                r["mean"] = row.mean;
                r["stderr"] = row.stderr_mean;
                table.append(r);
            }
            py::dict out;
            out["delta"] = result.delta_best;
            out["table"] = table;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("unlabeled"), py::arg("grid"), py::arg("folds") = 5,
        py::arg("loss") = "logistic", py::arg("cost_q") = 2.0, py::arg("cost_rho") = 1.0,
        py::arg("seed") = 0, "Cross-validated transport budget selection.");

    m.def(
        "select_delta_rwp",
        [](const std::vector<ssldro::vec>& x, const std::vector<double>& y,
           const std::vector<ssldro::vec>& unlabeled, double alpha, std::size_t samples,
           std::uint64_t seed) {
            const auto labeled = make_labeled(x, y);
            if (labeled.empty()) throw ssldro::data_error("empty labeled dataset");
            const std::size_t n = labeled.size();
            const std::size_t d = labeled[0].x.size();
            const ssldro::vec beta_hat = ssldro::least_squares_fit(labeled);
            ssldro::rng_engine rng(seed);
            if (d == 1) {
                ssldro::D1Moments moments;
                for (const auto& ex : labeled) {
                    const double e = ex.y - beta_hat[0] * ex.x[0];
                    moments.ex2e2 += ex.x[0] * ex.x[0] * e * e;
                    const double t = e - beta_hat[0] * ex.x[0];
                    moments.e_residual_sq += t * t;
                }
                moments.ex2e2 /= static_cast<double>(n);
                moments.e_residual_sq /= static_cast<double>(n);
                return ssldro::select_delta(
                    alpha, n, d,
                    [&moments](ssldro::rng_engine& r) {
                        return ssldro::sample_limit_d1(moments, r).value;
                    },
                    samples, rng);
            }
            ssldro::LimitPool pool;
            pool.beta_star = beta_hat;
            pool.gamma = static_cast<double>(n + unlabeled.size()) / static_cast<double>(n);
            std::vector<ssldro::vec> pooled;
            for (const auto& ex : labeled) {
                pool.X.push_back(ex.x);
                pool.e.push_back(ex.y - ssldro::dot(beta_hat, ex.x));
                pooled.push_back(ex.x);
            }
            for (const auto& row : unlabeled) pooled.push_back(row);
            pool.f_x = ssldro::fit_gaussian_density(pooled);
            return ssldro::select_delta(
                alpha, n, d,
                [&pool, d](ssldro::rng_engine& r) {
                    return d == 2 ? ssldro::sample_limit_d2(pool, r).value
                                  : ssldro::sample_limit_d3plus(pool, d, r).value;
                },
                samples, rng);
        },
        py::arg("x"), py::arg("y"), py::arg("unlabeled") = std::vector<ssldro::vec>{},
        py::arg("alpha") = 0.05, py::arg("samples") = 10000, py::arg("seed") = 0,
        "Limit-law transport budget selection for the squared loss.");
}
