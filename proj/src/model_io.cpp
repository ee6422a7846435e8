#include "ssldro/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ssldro/errors.hpp"

namespace ssldro {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

constexpr int kModelVersion = 1;

double parse_double_token(const std::string& token, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw data_error("model file: bad numeric value for '" + key + "': " + token);
    }
}

std::uint64_t parse_u64_token(const std::string& token, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw data_error("model file: bad integer value for '" + key + "': " + token);
    }
}

} // namespace

void save_model(const std::string& path, const PersistedModel& pm) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open model file for writing: " + path);
    out << "ssldro-model " << kModelVersion << "\n";
    out << "loss " << (pm.loss == LossKind::logistic ? "logistic" : "squared") << "\n";
    out << "cost_q " << format_double(pm.cost.q) << "\n";
    out << "cost_rho " << format_double(pm.cost.rho) << "\n";
    out << "delta " << format_double(pm.model.delta_star) << "\n";
    out << "epsilon " << format_double(pm.model.epsilon) << "\n";
    out << "lambda " << format_double(pm.model.lambda) << "\n";
    out << "objective " << format_double(pm.model.objective) << "\n";
    out << "fingerprint " << pm.model.data_fingerprint << "\n";
    out << "total_draws " << pm.model.total_draws << "\n";
    out << "resamples " << pm.model.resamples << "\n";
    out << "config " << pm.model.config_echo << "\n";
    out << "beta " << pm.model.beta.size();
    for (double b : pm.model.beta) out << ' ' << format_double(b);
    out << "\n";
    if (!out) throw data_error("write failure on model file: " + path);
}

PersistedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open model file: " + path);
    PersistedModel pm;
    std::string line;
    bool saw_magic = false, saw_beta = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (!saw_magic) {
            if (key != "ssldro-model")
                throw data_error("not a model file (bad magic): " + path);
            int version = 0;
            ls >> version;
            if (version != kModelVersion)
                throw data_error("unsupported model file version in " + path);
            saw_magic = true;
            continue;
        }
        std::string rest;
        if (key == "config") {
            std::getline(ls, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
            pm.model.config_echo = rest;
            continue;
        }
        if (key == "beta") {
            std::size_t count = 0;
            if (!(ls >> count)) throw data_error("model file: malformed beta line");
            pm.model.beta.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                std::string token;
                if (!(ls >> token)) throw data_error("model file: beta array shorter than declared");
                pm.model.beta[i] = parse_double_token(token, "beta");
            }
            saw_beta = true;
            continue;
        }
        std::string token;
        if (!(ls >> token)) throw data_error("model file: missing value for key '" + key + "'");
        if (key == "loss") {
            if (token == "logistic")
                pm.loss = LossKind::logistic;
            else if (token == "squared")
                pm.loss = LossKind::squared;
            else
                throw data_error("model file: unknown loss '" + token + "'");
        } else if (key == "cost_q") {
            pm.cost.q = parse_double_token(token, key);
        } else if (key == "cost_rho") {
            pm.cost.rho = parse_double_token(token, key);
        } else if (key == "delta") {
            pm.model.delta_star = parse_double_token(token, key);
        } else if (key == "epsilon") {
            pm.model.epsilon = parse_double_token(token, key);
        } else if (key == "lambda") {
            pm.model.lambda = parse_double_token(token, key);
        } else if (key == "objective") {
            pm.model.objective = parse_double_token(token, key);
        } else if (key == "fingerprint") {
            pm.model.data_fingerprint = parse_u64_token(token, key);
        } else if (key == "total_draws") {
            pm.model.total_draws = parse_u64_token(token, key);
        } else if (key == "resamples") {
            pm.model.resamples = parse_u64_token(token, key);
        } else {
            throw data_error("model file: unknown key '" + key + "'");
        }
    }
    if (!saw_magic) throw data_error("empty or unreadable model file: " + path);
    if (!saw_beta) throw data_error("model file missing the beta array: " + path);
    return pm;
}

} // namespace ssldro
