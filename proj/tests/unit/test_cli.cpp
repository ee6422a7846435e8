// End-to-end tests of the command-line binary.  The test runner exports
// SSLDRO_CLI with the absolute path of the executable; every case shells out
// with std::system and inspects exit codes, stderr, and the JSON reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "ssldro/dataset.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/model_io.hpp"
#include "ssldro/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssldro;

namespace {

const char* binary() {
    static const char* path = std::getenv("SSLDRO_CLI");
    return path;
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() /
              ("ssldro-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Scratch() { std::error_code ec; fs::remove_all(dir, ec); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

struct RunResult {
    int status = -1;
    std::string out, err;
};

RunResult run(const Scratch& tmp, const std::string& args_line) {
    static int run_id = 0;
    const std::string out_path = tmp.file("stdout-" + std::to_string(run_id) + ".txt");
    const std::string err_path = tmp.file("stderr-" + std::to_string(run_id) + ".txt");
    ++run_id;
    const std::string cmd = std::string(binary()) + " " + args_line + " > " + out_path +
                            " 2> " + err_path;
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

const std::string kTrainCsv =
    "1,0.9,1.1\n1,1.2,0.8\n1,0.7,1.3\n1,1.1,1.0\n1,0.8,0.7\n1,1.3,1.2\n"
    "-1,-1.0,-0.9\n-1,-0.8,-1.2\n-1,-1.1,-0.7\n-1,-1.2,-1.1\n-1,-0.9,-1.3\n-1,-0.7,-0.8\n";

const std::string kTestCsv = "1,1.0,0.5\n1,0.25,1.5\n-1,-0.5,-1.0\n-1,-1.5,-0.25\n";

const std::string kUnlabeledCsv = "0.1,0.2\n-0.3,0.4\n0.5,-0.6\n";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage problems exit with status 2") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    SUBCASE("missing required option") {
        const RunResult r = run(tmp, "train --out " + tmp.file("m.txt"));
        CHECK(r.status == 2);
        CHECK(!r.err.empty());
    }
    SUBCASE("unknown subcommand") {
        CHECK(run(tmp, "frobnicate").status == 2);
    }
    SUBCASE("no subcommand") {
        CHECK(run(tmp, "").status == 2);
    }
    SUBCASE("radius calibration rejects the logistic loss") {
        const std::string csv = tmp.file("train.csv");
        write_text(csv, kTrainCsv);
        const RunResult r =
            run(tmp, "select-delta --method rwp --loss logistic --labeled " + csv);
        CHECK(r.status == 2);
        CHECK(r.err.find("usage error") != std::string::npos);
    }
    SUBCASE("worst-case wants exactly one parameter source") {
        const std::string csv = tmp.file("train.csv");
        write_text(csv, kTrainCsv);
        CHECK(run(tmp, "worst-case --labeled " + csv).status == 2);
        CHECK(run(tmp, "worst-case --labeled " + csv +
                           " --beta 0.1,0.2 --model somewhere.txt")
                  .status == 2);
    }
    SUBCASE("help exits cleanly") {
        CHECK(run(tmp, "--help").status == 0);
    }
}

TEST_CASE("train writes a loadable model and a well-formed report") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string csv = tmp.file("train.csv");
    const std::string unl = tmp.file("extra.csv");
    const std::string model_path = tmp.file("model.txt");
    const std::string report_path = tmp.file("report.json");
    write_text(csv, kTrainCsv);
    write_text(unl, kUnlabeledCsv);

    const RunResult r = run(tmp, "train --labeled " + csv + " --unlabeled " + unl +
                                     " --delta 0.1 --epsilon 0.5 --exact --out " + model_path +
                                     " --report " + report_path);
    REQUIRE(r.status == 0);

    const json rep = json::parse(slurp(report_path));
    CHECK(rep["config"]["method"] == "exact");
    CHECK(rep["config"]["loss"] == "logistic");
    CHECK(rep["config"]["support_size"] == 12 + 2 * 3);
    CHECK(rep["config"]["n_labeled"] == 12);
    CHECK(rep["metrics"]["train_accuracy"].get<double>() == 1.0); // clearly separated blobs
    CHECK(rep["metrics"]["train_log_loss"].get<double>() > 0.0);
    CHECK(rep["model"]["lambda"].get<double>() >= 0.0);

    const PersistedModel pm = load_model(model_path);
    CHECK(pm.loss == LossKind::logistic);
    CHECK(pm.model.beta.size() == 2);
    CHECK(pm.model.delta_star == 0.1);
    CHECK(pm.model.epsilon == 0.5);
    CHECK(rep["model"]["fingerprint"].get<std::uint64_t>() == pm.model.data_fingerprint);
    CHECK(rep["model"]["lambda"].get<double>() == pm.model.lambda);
}

TEST_CASE("evaluation reproduces the library metrics bit for bit") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string model_path = tmp.file("zero.txt");
    const std::string test_path = tmp.file("test.csv");
    write_text(test_path, kTestCsv);

    PersistedModel pm;
    pm.loss = LossKind::logistic;
    pm.model.beta = {0.0, 0.0};
    save_model(model_path, pm);

    const std::string report_path = tmp.file("eval.json");
    const RunResult r =
        run(tmp, "eval --model " + model_path + " --test " + test_path + " --report " + report_path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(report_path));

    CsvSchema schema;
    const LabeledDataset test = load_csv_labeled(test_path, schema);
    // The shortest-round-trip JSON rendering must parse back to the exact double.
    CHECK(rep["metrics"]["test_log_loss"].get<double>() == mean_log_loss(test, pm.model.beta));
    CHECK(rep["metrics"]["test_accuracy"].get<double>() == accuracy(test, pm.model.beta));
    CHECK(rep["metrics"]["test_accuracy"].get<double>() == 0.5); // sign(0) = +1 convention
}

TEST_CASE("evaluation rejects a dimension mismatch with status 3") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string model_path = tmp.file("zero.txt");
    PersistedModel pm;
    pm.model.beta = {0.0, 0.0, 0.0};
    save_model(model_path, pm);
    const std::string test_path = tmp.file("test.csv");
    write_text(test_path, kTestCsv); // two predictors, model wants three
    const RunResult r = run(tmp, "eval --model " + model_path + " --test " + test_path);
    CHECK(r.status == 3);
    CHECK(r.err.find("data error") != std::string::npos);
}

TEST_CASE("missing input files exit with status 3") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const RunResult r = run(tmp, "train --labeled " + tmp.file("absent.csv") + " --out " +
                                     tmp.file("m.txt"));
    CHECK(r.status == 3);
}

TEST_CASE("zero-budget worst case is the empirical distribution") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string csv = tmp.file("train.csv");
    write_text(csv, kTrainCsv);
    const RunResult r = run(tmp, "worst-case --labeled " + csv +
                                     " --beta 0.25,-0.5 --loss logistic --delta 0");
    REQUIRE(r.status == 0);
    const json rep = json::parse(r.out); // no --report: the report goes to stdout
    CHECK(rep["budget_used"].get<double>() == 0.0);
    REQUIRE(rep["plan"].size() == 12);
    for (const auto& entry : rep["plan"]) {
        CHECK(entry["u"].get<std::size_t>() == entry["v"].get<std::size_t>());
        CHECK(entry["mass"].get<double>() == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
        CHECK(entry["cost"].get<double>() == 0.0);
    }
    const json marginal = rep["marginal"];
    REQUIRE(marginal.size() == 12);
    double total = 0.0;
    for (const auto& m : marginal) total += m.get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("radius cross-validation matches an in-process run exactly") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string csv = tmp.file("train.csv");
    write_text(csv, kTrainCsv);
    const std::string report_path = tmp.file("cv.json");
    const RunResult r = run(tmp, "select-delta --method cv --labeled " + csv +
                                     " --grid 0.05,0.2 --folds 3 --seed 5 --report " +
                                     report_path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(report_path));

    CsvSchema schema;
    const LabeledDataset labeled = load_csv_labeled(csv, schema);
    CvConfig cv;
    cv.folds = 3;
    cv.seed = 5;
    const CvResult expect = cross_validate_delta(labeled, {}, {0.05, 0.2}, cv,
                                                 TransportCost{2.0, 1.0},
                                                 LossModel{LossKind::logistic, 2});
    CHECK(rep["delta_star"].get<double>() == expect.delta_best);
    REQUIRE(rep["cv_table"].size() == expect.table.size());
    for (std::size_t i = 0; i < expect.table.size(); ++i) {
        const json& row = rep["cv_table"][i];
        CHECK(row["delta"].get<double>() == expect.table[i].delta);
        CHECK(row["mean"].get<double>() == expect.table[i].mean);
        CHECK(row["stderr"].get<double>() == expect.table[i].stderr_mean);
        REQUIRE(row["folds"].size() == expect.table[i].fold_values.size());
        for (std::size_t f = 0; f < expect.table[i].fold_values.size(); ++f)
            CHECK(row["folds"][f].get<double>() == expect.table[i].fold_values[f]);
    }
}

TEST_CASE("stochastic training is reproducible from the seed alone") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string csv = tmp.file("train.csv");
    write_text(csv, kTrainCsv);
    auto train_to = [&](const std::string& name, std::uint64_t seed) {
        const std::string path = tmp.file(name);
        const RunResult r = run(tmp, "train --labeled " + csv +
                                         " --delta 0.1 --epsilon 0.5 --iters 500 --batch 4" +
                                         " --seed " + std::to_string(seed) + " --out " + path);
        REQUIRE(r.status == 0);
        return slurp(path);
    };
    const std::string a = train_to("a.txt", 9);
    const std::string b = train_to("b.txt", 9);
    const std::string c = train_to("c.txt", 10);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("squared-loss training reports the regression metric") {
    REQUIRE(binary() != nullptr);
    Scratch tmp;
    const std::string csv = tmp.file("reg.csv");
    // Discrete labels keep cross-atom transport finite for the squared loss.
    write_text(csv, "1,0.8,0.1\n0,0.1,-0.2\n-1,-0.9,0.2\n1,1.1,-0.1\n-1,-1.2,0.3\n0,-0.2,0.1\n");
    const std::string report_path = tmp.file("reg.json");
    const RunResult r = run(tmp, "train --labeled " + csv +
                                     " --loss squared --delta 0.05 --epsilon 0.25 --exact" +
                                     " --cost-rho 2 --out " + tmp.file("reg-model.txt") +
                                     " --report " + report_path);
    REQUIRE(r.status == 0);
    const json rep = json::parse(slurp(report_path));
    CHECK(rep["metrics"].contains("train_mse"));
    CHECK(!rep["metrics"].contains("train_accuracy"));
    CHECK(rep["metrics"]["train_mse"].get<double>() >= 0.0);
}

} // TEST_SUITE
