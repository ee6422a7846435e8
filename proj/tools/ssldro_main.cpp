// Command-line front end: train, evaluate, select the ambiguity radius,
// inspect worst-case distributions, and run multi-seed experiments.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ssldro/dataset.hpp"
#include "ssldro/dro.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/experiment.hpp"
#include "ssldro/losses.hpp"
#include "ssldro/model_io.hpp"
#include "ssldro/rwp.hpp"
#include "ssldro/solver.hpp"
#include "ssldro/transport.hpp"

using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return ssldro::format_double(v); // "inf" etc. as a string; JSON has no infinities
}

std::string command_echo(int argc, char** argv) {
    std::string echo;
    for (int i = 0; i < argc; ++i) {
        if (i) echo += ' ';
        echo += argv[i];
    }
    return echo;
}

ssldro::LossKind parse_loss(const std::string& name) {
    if (name == "logistic") return ssldro::LossKind::logistic;
    if (name == "squared") return ssldro::LossKind::squared;
    throw ssldro::config_error("unknown loss '" + name + "' (expected logistic or squared)");
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(token, &pos));
            if (pos != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ssldro::config_error("bad number '" + token + "' in " + what);
        }
    }
    if (out.empty()) throw ssldro::config_error(what + " is empty");
    return out;
}

void emit_report(const ordered_json& report, const std::string& path) {
    if (path.empty()) {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw ssldro::data_error("cannot open report file for writing: " + path);
    out << report.dump(2) << "\n";
}

ssldro::LabeledDataset load_labeled(const std::string& path, ssldro::LossKind kind,
                                    bool header) {
    ssldro::CsvSchema schema;
    schema.has_label = true;
    schema.header = header;
    schema.label_kind =
        kind == ssldro::LossKind::logistic ? ssldro::LabelKind::binary : ssldro::LabelKind::real;
    return ssldro::load_csv_labeled(path, schema);
}

ssldro::UnlabeledDataset load_unlabeled(const std::string& path, bool header) {
    if (path.empty()) return {};
    ssldro::CsvSchema schema;
    schema.has_label = false;
    schema.header = header;
    return ssldro::load_csv_unlabeled(path, schema);
}

ordered_json cost_json(const ssldro::TransportCost& tc) {
    return ordered_json{{"q", json_number(tc.q)}, {"rho", json_number(tc.rho)}};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string labeled, unlabeled, out, report;
    double delta = 0.0;
    std::string loss = "logistic";
    double cost_q = 2.0, cost_rho = 1.0, epsilon = 0.0;
    std::size_t iters = 50000, batch = 8;
    double step_a = 1.0, step_b = 10.0, tail = 0.25;
    std::uint64_t seed = 0;
    bool exact = false;
    bool header = false;
};

int do_train(const TrainArgs& args, const std::string& echo) {
    const auto start = Clock::now();
    const ssldro::LossKind kind = parse_loss(args.loss);
    const auto labeled = load_labeled(args.labeled, kind, args.header);
    const auto unlabeled = load_unlabeled(args.unlabeled, args.header);
    const ssldro::SupportSet support = ssldro::build_support(labeled, unlabeled);
    const ssldro::LossModel model{kind, support.dimension()};
    const ssldro::TransportCost tc{args.cost_q, args.cost_rho};
    const ssldro::SmoothingConfig smoothing{args.epsilon, args.delta};

    ssldro::TrainedModel trained;
    if (args.exact) {
        trained = ssldro::exact_train(support, smoothing, tc, model);
    } else {
        ssldro::SgdConfig cfg;
        cfg.step_a = args.step_a;
        cfg.step_b = args.step_b;
        cfg.iterations = args.iters;
        cfg.batch = args.batch;
        cfg.tail_fraction = args.tail;
        cfg.seed = args.seed;
        trained = ssldro::sgd_train(support, smoothing, cfg, tc, model);
    }
    ssldro::save_model(args.out, {trained, kind, tc});

    ordered_json metrics;
    if (kind == ssldro::LossKind::logistic) {
        metrics["train_log_loss"] = ssldro::mean_log_loss(labeled, trained.beta);
        metrics["train_accuracy"] = ssldro::accuracy(labeled, trained.beta);
    } else {
        metrics["train_mse"] = ssldro::mean_squared_error(labeled, trained.beta);
    }

    ordered_json report{
        {"command", echo},
        {"config",
         {{"method", args.exact ? "exact" : "sgd"},
          {"loss", args.loss},
          {"delta", json_number(args.delta)},
          {"epsilon", json_number(trained.epsilon)},
          {"cost", cost_json(tc)},
          {"iterations", args.iters},
          {"batch", args.batch},
          {"step_a", args.step_a},
          {"step_b", args.step_b},
          {"tail_fraction", args.tail},
          {"support_size", support.size()},
          {"n_labeled", support.n_labeled},
          {"n_unlabeled", support.n_unlabeled},
          {"echo", trained.config_echo}}},
        {"metrics", metrics},
        {"model",
         {{"path", args.out},
          {"lambda", trained.lambda},
          {"objective", trained.objective},
          {"beta_norm2", ssldro::norm2(trained.beta)},
          {"fingerprint", trained.data_fingerprint}}},
        {"counters", {{"total_draws", trained.total_draws}, {"resamples", trained.resamples}}},
        {"seed", args.seed},
        {"timing_ms", elapsed_ms(start)}};
    emit_report(report, args.report);
    return 0;
}

// ---------------------------------------------------------------------------
// select-delta
// ---------------------------------------------------------------------------

struct SelectArgs {
    std::string method = "cv";
    std::string labeled, unlabeled, report;
    std::string grid;
    std::size_t folds = 5;
    std::string metric = "log-loss";
    std::string loss = "logistic";
    double cost_q = 2.0, cost_rho = 1.0, epsilon = 0.0;
    std::uint64_t seed = 0;
    double cv_tol = 1e-6;
    std::size_t cv_iters = 20000;
    double alpha = 0.05;
    std::size_t samples = 10000;
    bool header = false;
};

int do_select_delta(const SelectArgs& args, const std::string& echo) {
    const auto start = Clock::now();
    ordered_json report{{"command", echo}, {"method", args.method}};

    if (args.method == "cv") {
        if (args.grid.empty()) throw ssldro::config_error("select-delta --method cv needs --grid");
        const ssldro::LossKind kind = parse_loss(args.loss);
        const auto labeled = load_labeled(args.labeled, kind, args.header);
        const auto unlabeled = load_unlabeled(args.unlabeled, args.header);
        const auto grid = parse_number_list(args.grid, "--grid");
        ssldro::CvConfig cv;
        cv.folds = args.folds;
        if (args.metric == "log-loss")
            cv.metric = ssldro::CvMetric::log_loss;
        else if (args.metric == "accuracy")
            cv.metric = ssldro::CvMetric::accuracy;
        else
            throw ssldro::config_error("unknown metric '" + args.metric + "'");
        cv.epsilon = args.epsilon;
        cv.seed = args.seed;
        cv.train_tolerance = args.cv_tol;
        cv.train_iterations = args.cv_iters;
        const ssldro::TransportCost tc{args.cost_q, args.cost_rho};
        const std::size_t d = labeled.empty() ? 0 : labeled[0].x.size();
        const ssldro::LossModel model{kind, d};
        const ssldro::CvResult result =
            ssldro::cross_validate_delta(labeled, unlabeled, grid, cv, tc, model);
        report["delta_star"] = result.delta_best;
        ordered_json table = ordered_json::array();
        for (const auto& row : result.table) {
            table.push_back({{"delta", row.delta},
                             {"mean", row.mean},
                             {"stderr", row.stderr_mean},
                             {"folds", row.fold_values}});
        }
        report["cv_table"] = table;
        report["config"] = {{"folds", args.folds},
                            {"metric", args.metric},
                            {"loss", args.loss},
                            {"cost", cost_json(tc)},
                            {"epsilon", json_number(args.epsilon)},
                            {"seed", args.seed}};
    } else if (args.method == "rwp") {
        if (parse_loss(args.loss) != ssldro::LossKind::squared)
            throw ssldro::config_error(
                "select-delta --method rwp supports only the squared loss");
        const auto labeled = load_labeled(args.labeled, ssldro::LossKind::squared, args.header);
        const auto unlabeled = load_unlabeled(args.unlabeled, args.header);
        if (labeled.empty()) throw ssldro::data_error("select-delta: empty labeled dataset");
        const std::size_t n = labeled.size();
        const std::size_t d = labeled[0].x.size();
        const ssldro::vec beta_hat = ssldro::least_squares_fit(labeled);
        ssldro::rng_engine rng(args.seed);
        double delta_star = 0.0;
        if (d == 1) {
            ssldro::D1Moments moments;
            for (const auto& ex : labeled) {
                const double e = ex.y - beta_hat[0] * ex.x[0];
                moments.ex2e2 += ex.x[0] * ex.x[0] * e * e;
                moments.e_residual_sq += (e - beta_hat[0] * ex.x[0]) * (e - beta_hat[0] * ex.x[0]);
            }
            moments.ex2e2 /= static_cast<double>(n);
            moments.e_residual_sq /= static_cast<double>(n);
            delta_star = ssldro::select_delta(
                args.alpha, n, d,
                [&moments](ssldro::rng_engine& r) {
                    return ssldro::sample_limit_d1(moments, r).value;
                },
                args.samples, rng);
            report["kappa1"] = moments.ex2e2 / moments.e_residual_sq;
        } else {
            ssldro::LimitPool pool;
            pool.beta_star = beta_hat;
            pool.gamma = static_cast<double>(n + unlabeled.size()) / static_cast<double>(n);
            std::vector<ssldro::vec> pooled;
            for (const auto& ex : labeled) {
                pool.X.push_back(ex.x);
                pool.e.push_back(ex.y - ssldro::dot(beta_hat, ex.x));
                pooled.push_back(ex.x);
            }
            for (const auto& ex : unlabeled) pooled.push_back(ex.x);
            pool.f_x = ssldro::fit_gaussian_density(pooled);
            delta_star = ssldro::select_delta(
                args.alpha, n, d,
                [&pool, d](ssldro::rng_engine& r) {
                    return d == 2 ? ssldro::sample_limit_d2(pool, r).value
                                  : ssldro::sample_limit_d3plus(pool, d, r).value;
                },
                args.samples, rng);
            report["density"] = "gaussian fit to the pooled predictors";
        }
        report["delta_star"] = delta_star;
        report["config"] = {{"alpha", args.alpha},
                            {"samples", args.samples},
                            {"n", n},
                            {"d", d},
                            {"rate", ssldro::limit_rate(n, d)},
                            {"beta_source", "least-squares plug-in"},
                            {"seed", args.seed}};
        report["quantile"] = delta_star * ssldro::limit_rate(n, d);
    } else {
        throw ssldro::config_error("unknown --method '" + args.method + "' (expected cv or rwp)");
    }

    report["timing_ms"] = elapsed_ms(start);
    emit_report(report, args.report);
    return 0;
}

// ---------------------------------------------------------------------------
// worst-case
// ---------------------------------------------------------------------------

struct WorstArgs {
    std::string labeled, unlabeled, model, beta_text, report;
    double delta = -1.0; // < 0: take the model file's radius
    std::string loss = "logistic";
    double cost_q = 2.0, cost_rho = 1.0;
    bool header = false;
};

int do_worst_case(const WorstArgs& args, const std::string& echo) {
    const auto start = Clock::now();
    if (args.model.empty() == args.beta_text.empty())
        throw ssldro::config_error("worst-case needs exactly one of --model or --beta");

    ssldro::vec beta;
    ssldro::LossKind kind = ssldro::LossKind::logistic;
    ssldro::TransportCost tc{args.cost_q, args.cost_rho};
    double delta = args.delta;
    if (!args.model.empty()) {
        const ssldro::PersistedModel pm = ssldro::load_model(args.model);
        beta = pm.model.beta;
        kind = pm.loss;
        tc = pm.cost;
        if (delta < 0.0) delta = pm.model.delta_star;
    } else {
        beta = parse_number_list(args.beta_text, "--beta");
        kind = parse_loss(args.loss);
        if (delta < 0.0) delta = 0.0;
    }

    const auto labeled = load_labeled(args.labeled, kind, args.header);
    const auto unlabeled = load_unlabeled(args.unlabeled, args.header);
    const ssldro::SupportSet support = ssldro::build_support(labeled, unlabeled);
    const ssldro::LossModel model{kind, support.dimension()};

    const ssldro::WorstCaseDistribution wc =
        ssldro::inner_max_exact(support, beta, delta, tc, model);

    // Re-verify the constraints from the emitted plan before writing anything.
    const std::size_t n = support.n_labeled;
    std::vector<double> column_sums(n, 0.0);
    double budget = 0.0;
    for (const auto& entry : wc.plan.entries) {
        column_sums.at(entry.target) += entry.mass;
        budget += entry.mass *
                  ssldro::cost(support.points.at(entry.source), support.points.at(entry.target), tc)
                      .value();
    }
    for (double s : column_sums)
        if (std::fabs(s - 1.0 / static_cast<double>(n)) > 1e-9)
            throw ssldro::numeric_error("worst-case: a plan column sum drifted from 1/n");
    if (budget > delta + 1e-9)
        throw ssldro::numeric_error("worst-case: plan exceeds the transport budget");

    ordered_json plan = ordered_json::array();
    for (const auto& entry : wc.plan.entries) {
        plan.push_back(
            {{"u", entry.source},
             {"v", entry.target},
             {"mass", entry.mass},
             {"cost",
              ssldro::cost(support.points[entry.source], support.points[entry.target], tc)
                  .value()}});
    }
    ordered_json report{{"command", echo},
                        {"config",
                         {{"delta", delta},
                          {"loss", kind == ssldro::LossKind::logistic ? "logistic" : "squared"},
                          {"cost", cost_json(tc)},
                          {"support_size", support.size()},
                          {"n_labeled", support.n_labeled}}},
                        {"objective", wc.value},
                        {"budget_used", wc.budget_used},
                        {"plan", plan},
                        {"marginal", wc.marginal},
                        {"timing_ms", elapsed_ms(start)}};
    emit_report(report, args.report);
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model, test, report;
    bool header = false;
};

int do_eval(const EvalArgs& args, const std::string& echo) {
    const auto start = Clock::now();
    const ssldro::PersistedModel pm = ssldro::load_model(args.model);
    const auto test = load_labeled(args.test, pm.loss, args.header);
    if (test.empty()) throw ssldro::data_error("eval: empty test set");
    if (test[0].x.size() != pm.model.beta.size())
        throw ssldro::data_error("eval: test dimension " + std::to_string(test[0].x.size()) +
                                 " does not match model dimension " +
                                 std::to_string(pm.model.beta.size()));

    ordered_json metrics;
    if (pm.loss == ssldro::LossKind::logistic) {
        metrics["test_log_loss"] = ssldro::mean_log_loss(test, pm.model.beta);
        metrics["test_accuracy"] = ssldro::accuracy(test, pm.model.beta);
    } else {
        metrics["test_mse"] = ssldro::mean_squared_error(test, pm.model.beta);
    }
    ordered_json report{{"command", echo},
                        {"model",
                         {{"path", args.model},
                          {"loss", pm.loss == ssldro::LossKind::logistic ? "logistic" : "squared"},
                          {"delta", pm.model.delta_star},
                          {"epsilon", pm.model.epsilon},
                          {"lambda", pm.model.lambda},
                          {"fingerprint", pm.model.data_fingerprint}}},
                        {"metrics", metrics},
                        {"timing_ms", elapsed_ms(start)}};
    emit_report(report, args.report);
    return 0;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperArgs {
    std::string data, report;
    double split_labeled = 0.0, split_unlabeled = 0.0, split_test = 0.0;
    std::string loss = "logistic";
    double cost_q = 2.0, cost_rho = 1.0, epsilon = 0.0;
    double delta = 0.0;
    std::string grid;
    std::size_t folds = 5;
    bool sgd = false;
    std::size_t iters = 50000, batch = 8;
    double step_a = 1.0, step_b = 10.0;
    std::size_t num_seeds = 20;
    std::uint64_t seed_base = 1;
    bool standardize = false;
    double cv_tol = 1e-6;
    std::size_t cv_iters = 20000;
    double exact_tol = 1e-6;
    bool header = false;
};

int do_experiment(const ExperArgs& args, const std::string& echo) {
    const auto start = Clock::now();
    const ssldro::LossKind kind = parse_loss(args.loss);
    const auto data = load_labeled(args.data, kind, args.header);

    ssldro::ExperimentConfig config;
    config.split = {args.split_labeled, args.split_unlabeled, args.split_test};
    config.cost = {args.cost_q, args.cost_rho};
    config.loss = kind;
    config.standardize = args.standardize;
    config.delta = args.delta;
    if (!args.grid.empty()) {
        config.cv_select = true;
        config.delta_grid = parse_number_list(args.grid, "--grid");
        config.cv.folds = args.folds;
        config.cv.train_tolerance = args.cv_tol;
        config.cv.train_iterations = args.cv_iters;
    }
    config.epsilon = args.epsilon;
    config.use_exact = !args.sgd;
    config.exact_tolerance = args.exact_tol;
    config.sgd.step_a = args.step_a;
    config.sgd.step_b = args.step_b;
    config.sgd.iterations = args.iters;
    config.sgd.batch = args.batch;
    for (std::size_t i = 0; i < args.num_seeds; ++i)
        config.seeds.push_back(args.seed_base + i);

    const ssldro::ExperimentResult result = ssldro::run_experiment(data, config);

    ordered_json rows = ordered_json::array();
    for (const auto& row : result.rows) {
        rows.push_back({{"seed", row.seed},
                        {"delta", row.delta},
                        {"train_loss", row.train_loss},
                        {"test_loss", row.test_loss},
                        {"test_accuracy", row.test_accuracy},
                        {"lambda", row.model.lambda},
                        {"objective", row.model.objective}});
    }
    ordered_json report{
        {"command", echo},
        {"config",
         {{"loss", args.loss},
          {"split", {args.split_labeled, args.split_unlabeled, args.split_test}},
          {"cost", cost_json(config.cost)},
          {"method", config.use_exact ? "exact" : "sgd"},
          {"delta", config.cv_select ? ordered_json("cv") : ordered_json(args.delta)},
          {"grid", args.grid},
          {"standardize", args.standardize},
          {"seeds", args.num_seeds},
          {"seed_base", args.seed_base},
          {"threads", ssldro::thread_budget()}}},
        {"aggregates",
         {{"train_loss", {{"mean", result.train_loss.mean}, {"sd", result.train_loss.sd}}},
          {"test_loss", {{"mean", result.test_loss.mean}, {"sd", result.test_loss.sd}}},
          {"test_accuracy",
           {{"mean", result.test_accuracy.mean}, {"sd", result.test_accuracy.sd}}},
          {"delta", {{"mean", result.delta.mean}, {"sd", result.delta.sd}}}}},
        {"rows", rows},
        {"timing_ms", elapsed_ms(start)}};
    emit_report(report, args.report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised distributionally robust training toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a robust linear model");
    train->add_option("--labeled", train_args.labeled, "labeled CSV (label first)")->required();
    train->add_option("--unlabeled", train_args.unlabeled, "unlabeled CSV (predictors only)");
    train->add_option("--delta", train_args.delta, "transport budget (>= 0)");
    train->add_option("--loss", train_args.loss, "logistic|squared");
    train->add_option("--cost-q", train_args.cost_q, "ground-cost norm order q");
    train->add_option("--cost-rho", train_args.cost_rho, "ground-cost exponent rho");
    train->add_option("--epsilon", train_args.epsilon, "smoothing temperature (<= 0: auto)");
    train->add_option("--iters", train_args.iters, "sgd iterations");
    train->add_option("--batch", train_args.batch, "gradient batch size");
    train->add_option("--step-a", train_args.step_a, "step size numerator a");
    train->add_option("--step-b", train_args.step_b, "step size offset b");
    train->add_option("--tail", train_args.tail, "tail-averaging fraction");
    train->add_option("--seed", train_args.seed, "rng seed");
    train->add_option("--out", train_args.out, "model output path")->required();
    train->add_option("--report", train_args.report, "report path (default: stdout)");
    train->add_flag("--exact", train_args.exact, "deterministic full-gradient training");
    train->add_flag("--csv-header", train_args.header, "skip the first CSV row");

    SelectArgs select_args;
    CLI::App* select = app.add_subcommand("select-delta", "choose the ambiguity radius");
    select->add_option("--method", select_args.method, "cv|rwp")->required();
    select->add_option("--labeled", select_args.labeled, "labeled CSV")->required();
    select->add_option("--unlabeled", select_args.unlabeled, "unlabeled CSV");
    select->add_option("--grid", select_args.grid, "comma-separated radii (cv)");
    select->add_option("--folds", select_args.folds, "cv folds");
    select->add_option("--metric", select_args.metric, "log-loss|accuracy");
    select->add_option("--loss", select_args.loss, "logistic|squared");
    select->add_option("--cost-q", select_args.cost_q, "ground-cost norm order q");
    select->add_option("--cost-rho", select_args.cost_rho, "ground-cost exponent rho");
    select->add_option("--epsilon", select_args.epsilon, "smoothing temperature (<= 0: auto)");
    select->add_option("--seed", select_args.seed, "rng seed");
    select->add_option("--cv-tol", select_args.cv_tol, "inner training tolerance");
    select->add_option("--cv-iters", select_args.cv_iters, "inner training iteration cap");
    select->add_option("--alpha", select_args.alpha, "confidence level (rwp)");
    select->add_option("--samples", select_args.samples, "limit-law sample count (rwp)");
    select->add_option("--report", select_args.report, "report path (default: stdout)");
    select->add_flag("--csv-header", select_args.header, "skip the first CSV row");

    WorstArgs worst_args;
    CLI::App* worst = app.add_subcommand("worst-case", "dump the adversarial distribution");
    worst->add_option("--labeled", worst_args.labeled, "labeled CSV")->required();
    worst->add_option("--unlabeled", worst_args.unlabeled, "unlabeled CSV");
    worst->add_option("--model", worst_args.model, "model file supplying beta");
    worst->add_option("--beta", worst_args.beta_text, "comma-separated parameter vector");
    worst->add_option("--delta", worst_args.delta, "transport budget");
    worst->add_option("--loss", worst_args.loss, "logistic|squared (with --beta)");
    worst->add_option("--cost-q", worst_args.cost_q, "ground-cost norm order q");
    worst->add_option("--cost-rho", worst_args.cost_rho, "ground-cost exponent rho");
    worst->add_option("--report", worst_args.report, "report path (default: stdout)");
    worst->add_flag("--csv-header", worst_args.header, "skip the first CSV row");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score a persisted model on a test CSV");
    eval->add_option("--model", eval_args.model, "model file")->required();
    eval->add_option("--test", eval_args.test, "test CSV")->required();
    eval->add_option("--report", eval_args.report, "report path (default: stdout)");
    eval->add_flag("--csv-header", eval_args.header, "skip the first CSV row");

    ExperArgs exper_args;
    CLI::App* exper = app.add_subcommand("experiment", "multi-seed split/train/test runs");
    exper->add_option("--data", exper_args.data, "full labeled CSV")->required();
    exper->add_option("--split-labeled", exper_args.split_labeled, "labeled count or fraction")
        ->required();
    exper->add_option("--split-unlabeled", exper_args.split_unlabeled,
                      "unlabeled count or fraction")
        ->required();
    exper->add_option("--split-test", exper_args.split_test, "test count or fraction")->required();
    exper->add_option("--loss", exper_args.loss, "logistic|squared");
    exper->add_option("--cost-q", exper_args.cost_q, "ground-cost norm order q");
    exper->add_option("--cost-rho", exper_args.cost_rho, "ground-cost exponent rho");
    exper->add_option("--epsilon", exper_args.epsilon, "smoothing temperature (<= 0: auto)");
    exper->add_option("--delta", exper_args.delta, "fixed transport budget");
    exper->add_option("--grid", exper_args.grid, "cv grid; overrides --delta");
    exper->add_option("--folds", exper_args.folds, "cv folds");
    exper->add_flag("--sgd", exper_args.sgd, "stochastic training instead of exact");
    exper->add_option("--iters", exper_args.iters, "sgd iterations");
    exper->add_option("--batch", exper_args.batch, "sgd batch size");
    exper->add_option("--step-a", exper_args.step_a, "sgd step numerator");
    exper->add_option("--step-b", exper_args.step_b, "sgd step offset");
    exper->add_option("--seeds", exper_args.num_seeds, "number of seeds");
    exper->add_option("--seed-base", exper_args.seed_base, "first seed value");
    exper->add_flag("--standardize", exper_args.standardize, "per-split feature standardization");
    exper->add_option("--cv-tol", exper_args.cv_tol, "cv inner training tolerance");
    exper->add_option("--cv-iters", exper_args.cv_iters, "cv inner training iteration cap");
    exper->add_option("--exact-tol", exper_args.exact_tol, "final training tolerance");
    exper->add_option("--report", exper_args.report, "report path (default: stdout)");
    exper->add_flag("--csv-header", exper_args.header, "skip the first CSV row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string echo = command_echo(argc, argv);
    try {
        if (train->parsed()) return do_train(train_args, echo);
        if (select->parsed()) return do_select_delta(select_args, echo);
        if (worst->parsed()) return do_worst_case(worst_args, echo);
        if (eval->parsed()) return do_eval(eval_args, echo);
        if (exper->parsed()) return do_experiment(exper_args, echo);
        std::cerr << "error: no subcommand given\n";
        return 2;
    } catch (const ssldro::config_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ssldro::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ssldro::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
