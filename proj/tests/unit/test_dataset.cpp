#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "doctest.h"
#include "oracles.hpp"
#include "ssldro/dataset.hpp"
#include "ssldro/errors.hpp"

namespace fs = std::filesystem;
using namespace ssldro;

namespace {

// Fresh scratch directory per test run; cleaned up on destruction.
struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() /
              ("ssldro-data-" + std::to_string(::getpid()) + "-" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Scratch() { std::error_code ec; fs::remove_all(dir, ec); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("labeled csv round trip preserves every bit") {
    Scratch tmp;
    LabeledDataset data{{{1.0, -2.5, 0.1234567890123456789}, 1.0},
                        {{-0.75, 3e-17, 1e300}, -1.0}};
    const std::string path = tmp.file("round.csv");
    save_csv_labeled(path, data);
    CsvSchema schema;
    const LabeledDataset back = load_csv_labeled(path, schema);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].y == data[i].y);
        REQUIRE(back[i].x.size() == data[i].x.size());
        for (std::size_t j = 0; j < data[i].x.size(); ++j) CHECK(back[i].x[j] == data[i].x[j]);
    }
}

TEST_CASE("unlabeled csv round trip") {
    Scratch tmp;
    UnlabeledDataset data{{{0.5, -1.5}}, {{2.25, 4.0}}};
    const std::string path = tmp.file("u.csv");
    save_csv_unlabeled(path, data);
    CsvSchema schema;
    schema.has_label = false;
    const UnlabeledDataset back = load_csv_unlabeled(path, schema);
    REQUIRE(back.size() == 2);
    CHECK(back[1].x[0] == 2.25);
}

TEST_CASE("binary labels must be plus or minus one") {
    Scratch tmp;
    const std::string path = tmp.file("bad.csv");
    write_text(path, "1,0.5,0.5\n2,0.1,0.2\n");
    CsvSchema schema;
    CHECK_THROWS_AS(load_csv_labeled(path, schema), data_error);
    schema.label_kind = LabelKind::real; // regression labels are unconstrained
    CHECK(load_csv_labeled(path, schema)[1].y == 2.0);
}

TEST_CASE("ragged and malformed rows are rejected with line numbers") {
    Scratch tmp;
    const std::string path = tmp.file("ragged.csv");
    write_text(path, "1,0.5,0.5\n-1,0.1\n");
    CsvSchema schema;
    CHECK_THROWS_WITH_AS(load_csv_labeled(path, schema),
                         doctest::Contains(":2:"), data_error);
    write_text(path, "1,abc\n");
    CHECK_THROWS_AS(load_csv_labeled(path, schema), data_error);
    write_text(path, "\n\n");
    CHECK_THROWS_AS(load_csv_labeled(path, schema), data_error);
    CHECK_THROWS_AS(load_csv_labeled(tmp.file("missing.csv"), schema), data_error);
}

TEST_CASE("header row is skipped when the schema says so") {
    Scratch tmp;
    const std::string path = tmp.file("h.csv");
    write_text(path, "label,f1\n1,0.25\n-1,0.5\n");
    CsvSchema schema;
    schema.header = true;
    const LabeledDataset data = load_csv_labeled(path, schema);
    REQUIRE(data.size() == 2);
    CHECK(data[0].x[0] == 0.25);
}

TEST_CASE("support layout: labeled prefix, then +1 replicas, then -1 replicas") {
    LabeledDataset labeled{{{0.0, 0.0}, 1.0}, {{1.0, 1.0}, -1.0}};
    UnlabeledDataset unlabeled{{{2.0, 2.0}}, {{3.0, 3.0}}};
    const SupportSet s = build_support(labeled, unlabeled);
    // |X_N| = n + 2(N - n): each unlabeled predictor appears under both labels.
    CHECK(s.size() == 6);
    CHECK(s.n_labeled == 2);
    CHECK(s.n_unlabeled == 2);
    CHECK(s.dimension() == 2);
    CHECK(s.points[0].tag == Provenance::labeled);
    CHECK(s.points[2].tag == Provenance::replicated_positive);
    CHECK(s.points[2].y == 1.0);
    CHECK(s.points[4].tag == Provenance::replicated_negative);
    CHECK(s.points[4].y == -1.0);
    CHECK(s.points[4].x == s.points[2].x); // same predictor, both labels
}

TEST_CASE("support rejects dimension mismatches") {
    LabeledDataset labeled{{{0.0, 0.0}, 1.0}};
    UnlabeledDataset unlabeled{{{2.0}}};
    CHECK_THROWS_AS(build_support(labeled, unlabeled), data_error);
    CHECK_THROWS_AS(build_support({}, {}), data_error);
}

TEST_CASE("split by fractions and by counts partitions without overlap") {
    ssldro::rng_engine rng(7);
    const LabeledDataset data = oracle::gaussian_blobs(100, 2, 1.0, rng);

    const SplitResult by_frac = split(data, {0.4, 0.3, 0.3}, 11);
    CHECK(by_frac.labeled.size() == 40);
    CHECK(by_frac.unlabeled.size() == 30);
    CHECK(by_frac.test.size() == 30);

    const SplitResult by_count = split(data, {40, 30, 30}, 11);
    CHECK(by_count.labeled.size() == 40);

    std::set<std::size_t> seen;
    for (auto i : by_count.labeled_idx) seen.insert(i);
    for (auto i : by_count.unlabeled_idx) seen.insert(i);
    for (auto i : by_count.test_idx) seen.insert(i);
    CHECK(seen.size() == 100); // disjoint and exhaustive here

    // The unlabeled part really drops its labels: only predictors survive.
    CHECK(by_count.unlabeled[0].x == data[by_count.unlabeled_idx[0]].x);
}

TEST_CASE("split is reproducible from the seed and sensitive to it") {
    ssldro::rng_engine rng(8);
    const LabeledDataset data = oracle::gaussian_blobs(60, 2, 1.0, rng);
    const SplitResult a = split(data, {20, 20, 20}, 5);
    const SplitResult b = split(data, {20, 20, 20}, 5);
    const SplitResult c = split(data, {20, 20, 20}, 6);
    CHECK(a.labeled_idx == b.labeled_idx);
    CHECK(a.test_idx == b.test_idx);
    CHECK(a.labeled_idx != c.labeled_idx);
}

TEST_CASE("split rejects bad specs") {
    ssldro::rng_engine rng(9);
    const LabeledDataset data = oracle::gaussian_blobs(10, 2, 1.0, rng);
    CHECK_THROWS_AS(split(data, {0.5, 0.5, 0.5}, 0), config_error);  // fractions > 1
    CHECK_THROWS_AS(split(data, {0.5, 3, 3}, 0), config_error);      // mixed forms
    CHECK_THROWS_AS(split(data, {8, 8, 8}, 0), config_error);        // counts too big
    CHECK_THROWS_AS(split(data, {0, 5, 5}, 0), config_error);        // empty part
}

TEST_CASE("standardizer centers and scales the pooled predictors") {
    LabeledDataset labeled{{{2.0, 5.0}, 1.0}, {{4.0, 5.0}, -1.0}};
    UnlabeledDataset unlabeled{{{6.0, 5.0}}};
    const Standardizer st = fit_standardizer(labeled, unlabeled);
    CHECK(st.mean[0] == doctest::Approx(4.0));
    CHECK(st.sd[1] == 1.0); // zero-spread feature passes through unscaled
    LabeledDataset lcopy = labeled;
    UnlabeledDataset ucopy = unlabeled;
    st.apply_inplace(lcopy);
    st.apply_inplace(ucopy);
    const double pooled_mean = (lcopy[0].x[0] + lcopy[1].x[0] + ucopy[0].x[0]) / 3.0;
    const double pooled_msq =
        (lcopy[0].x[0] * lcopy[0].x[0] + lcopy[1].x[0] * lcopy[1].x[0] +
         ucopy[0].x[0] * ucopy[0].x[0]) /
        3.0;
    CHECK(std::fabs(pooled_mean) < 1e-12);
    CHECK(pooled_msq == doctest::Approx(1.0)); // unit variance after scaling
    CHECK(lcopy[0].x[1] == 0.0);
    CHECK_THROWS_AS(st.apply({1.0}), data_error);
}

} // TEST_SUITE
