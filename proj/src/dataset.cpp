#include "ssldro/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ssldro/errors.hpp"
#include "ssldro/rng.hpp"

namespace ssldro {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_field(const std::string& field, const std::string& path, std::size_t line_no) {
    const std::string t = trim(field);
    // std::from_chars does not accept a leading '+', which label columns use.
    const char* begin = t.c_str();
    if (!t.empty() && t[0] == '+') ++begin;
    double value = 0.0;
    const char* end = t.c_str() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end)
        throw data_error(path + ":" + std::to_string(line_no) + ": cannot parse numeric field '" + t + "'");
    return value;
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

// Shared row reader: returns rows of numeric fields keyed by 1-based line number.
std::vector<std::pair<std::size_t, std::vector<double>>>
read_rows(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (schema.header && line_no == 1) continue;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line, schema.delimiter);
        std::vector<double> values;
        values.reserve(fields.size());
        for (const auto& f : fields) values.push_back(parse_field(f, path, line_no));
        if (width == 0) {
            width = values.size();
            const std::size_t min_width = schema.has_label ? 2u : 1u;
            if (values.size() < min_width)
                throw data_error(path + ":" + std::to_string(line_no) + ": row too short");
        } else if (values.size() != width) {
            throw data_error(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(width) + " fields, found " + std::to_string(values.size()));
        }
        rows.emplace_back(line_no, std::move(values));
    }
    if (rows.empty()) throw data_error(path + ": no data rows");
    return rows;
}

void write_fields(std::ofstream& out, const vec& x, char delimiter, bool leading_delim) {
    char buf[64];
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", x[j]);
        if (leading_delim || j > 0) out << delimiter;
        out << buf;
    }
    out << '\n';
}

} // namespace

LabeledDataset load_csv_labeled(const std::string& path, const CsvSchema& schema) {
    if (!schema.has_label) throw config_error("load_csv_labeled: schema says has_label=false");
    LabeledDataset data;
    for (auto& [line_no, values] : read_rows(path, schema)) {
        LabeledExample ex;
        ex.y = values[0];
        if (schema.label_kind == LabelKind::binary && ex.y != -1.0 && ex.y != 1.0)
            throw data_error(path + ":" + std::to_string(line_no) +
                             ": label must be -1 or +1, found " + std::to_string(ex.y));
        ex.x.assign(values.begin() + 1, values.end());
        data.push_back(std::move(ex));
    }
    return data;
}

UnlabeledDataset load_csv_unlabeled(const std::string& path, const CsvSchema& schema) {
    if (schema.has_label) throw config_error("load_csv_unlabeled: schema says has_label=true");
    UnlabeledDataset data;
    for (auto& [line_no, values] : read_rows(path, schema)) {
        (void)line_no;
        data.push_back({vec(values.begin(), values.end())});
    }
    return data;
}

void save_csv_labeled(const std::string& path, const LabeledDataset& data, char delimiter) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    char buf[64];
    for (const auto& ex : data) {
        std::snprintf(buf, sizeof buf, "%.17g", ex.y);
        out << buf;
        write_fields(out, ex.x, delimiter, /*leading_delim=*/true);
    }
}

void save_csv_unlabeled(const std::string& path, const UnlabeledDataset& data, char delimiter) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    for (const auto& ex : data) write_fields(out, ex.x, delimiter, /*leading_delim=*/false);
}

SupportSet build_support(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled) {
    if (labeled.empty() && unlabeled.empty()) throw data_error("build_support: no data");
    const std::size_t d = labeled.empty() ? unlabeled[0].x.size() : labeled[0].x.size();
    SupportSet support;
    support.n_labeled = labeled.size();
    support.n_unlabeled = unlabeled.size();
    support.points.reserve(labeled.size() + 2 * unlabeled.size());
    for (const auto& ex : labeled) {
        if (ex.x.size() != d) throw data_error("build_support: inconsistent dimension in labeled data");
        support.points.push_back({ex.x, ex.y, Provenance::labeled});
    }
    for (const auto& ex : unlabeled) {
        if (ex.x.size() != d) throw data_error("build_support: unlabeled dimension mismatch");
        support.points.push_back({ex.x, +1.0, Provenance::replicated_positive});
    }
    for (const auto& ex : unlabeled) {
        support.points.push_back({ex.x, -1.0, Provenance::replicated_negative});
    }
    return support;
}

SplitResult split(const LabeledDataset& data, const SplitSpec& spec, std::uint64_t seed) {
    const std::size_t size = data.size();
    if (size < 3) throw data_error("split: need at least 3 rows");
    const double parts[3] = {spec.labeled, spec.unlabeled, spec.test};
    for (double p : parts)
        if (!(p > 0.0)) throw config_error("split: all three sizes must be positive");

    const bool counts = parts[0] >= 1.0 && parts[1] >= 1.0 && parts[2] >= 1.0;
    std::size_t sizes[3];
    if (counts) {
        double total = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (parts[i] != std::floor(parts[i]))
                throw config_error("split: counts must be integers (or use fractions < 1)");
            sizes[i] = static_cast<std::size_t>(parts[i]);
            total += parts[i];
        }
        if (total > static_cast<double>(size))
            throw config_error("split: counts sum to more than the dataset size");
    } else {
        if (parts[0] >= 1.0 || parts[1] >= 1.0 || parts[2] >= 1.0)
            throw config_error("split: mixing fractions and counts is not supported");
        if (parts[0] + parts[1] + parts[2] > 1.0 + 1e-12)
            throw config_error("split: fractions sum to more than 1");
        for (int i = 0; i < 3; ++i)
            sizes[i] = static_cast<std::size_t>(std::floor(parts[i] * static_cast<double>(size)));
    }
    for (int i = 0; i < 3; ++i)
        if (sizes[i] == 0) throw data_error("split: a partition came out empty");

    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    rng_engine rng(seed);
    shuffle(order, rng);

    SplitResult result;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i) result.labeled_idx.push_back(order[pos++]);
    for (std::size_t i = 0; i < sizes[1]; ++i) result.unlabeled_idx.push_back(order[pos++]);
    for (std::size_t i = 0; i < sizes[2]; ++i) result.test_idx.push_back(order[pos++]);
    for (std::size_t i : result.labeled_idx) result.labeled.push_back(data[i]);
    for (std::size_t i : result.unlabeled_idx) result.unlabeled.push_back({data[i].x});
    for (std::size_t i : result.test_idx) result.test.push_back(data[i]);
    return result;
}

vec Standardizer::apply(const vec& x) const {
    if (x.size() != mean.size()) throw data_error("standardize: dimension mismatch");
    vec z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / sd[j];
    return z;
}

void Standardizer::apply_inplace(LabeledDataset& data) const {
    for (auto& ex : data) ex.x = apply(ex.x);
}

void Standardizer::apply_inplace(UnlabeledDataset& data) const {
    for (auto& ex : data) ex.x = apply(ex.x);
}

Standardizer fit_standardizer(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled) {
    if (labeled.empty() && unlabeled.empty()) throw data_error("fit_standardizer: no data");
    const std::size_t d = labeled.empty() ? unlabeled[0].x.size() : labeled[0].x.size();
    const double count = static_cast<double>(labeled.size() + unlabeled.size());
    Standardizer st;
    st.mean.assign(d, 0.0);
    st.sd.assign(d, 0.0);
    auto accumulate_mean = [&](const vec& x) {
        if (x.size() != d) throw data_error("fit_standardizer: dimension mismatch");
        for (std::size_t j = 0; j < d; ++j) st.mean[j] += x[j];
    };
    for (const auto& ex : labeled) accumulate_mean(ex.x);
    for (const auto& ex : unlabeled) accumulate_mean(ex.x);
    for (double& m : st.mean) m /= count;
    auto accumulate_var = [&](const vec& x) {
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x[j] - st.mean[j];
            st.sd[j] += c * c;
        }
    };
    for (const auto& ex : labeled) accumulate_var(ex.x);
    for (const auto& ex : unlabeled) accumulate_var(ex.x);
    for (double& s : st.sd) {
        s = std::sqrt(s / count);
        if (s == 0.0) s = 1.0;
    }
    return st;
}

} // namespace ssldro
