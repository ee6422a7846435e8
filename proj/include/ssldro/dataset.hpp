// Dataset ingestion, seeded splits, and construction of the augmented
// support set: the labeled sample followed by every unlabeled predictor
// replicated once under each candidate label.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssldro/vecops.hpp"

namespace ssldro {

struct LabeledExample {
    vec x;
    double y = 0.0; // classification: exactly -1 or +1; regression: any real
};

struct UnlabeledExample {
    vec x;
};

using LabeledDataset = std::vector<LabeledExample>;
using UnlabeledDataset = std::vector<UnlabeledExample>;

// Where a support atom came from.
enum class Provenance { labeled, replicated_positive, replicated_negative };

struct SupportPoint {
    vec x;
    double y = 0.0;
    Provenance tag = Provenance::labeled;
};

// The finite support the adversary may place mass on.  Layout contract:
// points[0..n_labeled) is the labeled sample in input order, followed by the
// positive replicas of the unlabeled predictors, then the negative replicas.
struct SupportSet {
    std::vector<SupportPoint> points;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;

    std::size_t size() const { return points.size(); }
    std::size_t dimension() const { return points.empty() ? 0 : points[0].x.size(); }
};

// How labels are interpreted when reading/writing CSV.
enum class LabelKind { binary, real };

struct CsvSchema {
    bool has_label = true;
    char delimiter = ',';
    bool header = false;            // skip the first row
    LabelKind label_kind = LabelKind::binary;
};

LabeledDataset load_csv_labeled(const std::string& path, const CsvSchema& schema);
UnlabeledDataset load_csv_unlabeled(const std::string& path, const CsvSchema& schema);

void save_csv_labeled(const std::string& path, const LabeledDataset& data, char delimiter = ',');
void save_csv_unlabeled(const std::string& path, const UnlabeledDataset& data, char delimiter = ',');

SupportSet build_support(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled);

// Sizes may be given as fractions (every value in (0,1), sum <= 1) or as
// absolute counts (every value a positive integer); mixing the two forms is
// rejected.  With fractions, partition sizes are floor(fraction * size).
struct SplitSpec {
    double labeled = 0.0;
    double unlabeled = 0.0;
    double test = 0.0;
};

struct SplitResult {
    LabeledDataset labeled;
    UnlabeledDataset unlabeled;      // labels dropped
    LabeledDataset test;
    // Row indices into the input dataset, for audit and partition checks.
    std::vector<std::size_t> labeled_idx, unlabeled_idx, test_idx;
};

SplitResult split(const LabeledDataset& data, const SplitSpec& spec, std::uint64_t seed);

// Per-feature affine transform z = (x - mean) / sd.  Features with zero
// spread keep sd = 1 so they pass through unscaled.
struct Standardizer {
    vec mean;
    vec sd;

    vec apply(const vec& x) const;
    void apply_inplace(LabeledDataset& data) const;
    void apply_inplace(UnlabeledDataset& data) const;
};

// Fit on the pooled labeled + unlabeled predictors.
Standardizer fit_standardizer(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled);

} // namespace ssldro
