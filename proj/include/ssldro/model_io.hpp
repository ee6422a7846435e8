#pragma once

#include <string>

#include "ssldro/losses.hpp"
#include "ssldro/solver.hpp"
#include "ssldro/transport.hpp"

namespace ssldro {

// A trained model plus everything needed to evaluate it again: loss family
// and ground-cost parameters.  Persisted as versioned plain-text key/value
// with numbers at 17 significant digits, so a save/load round trip
// reproduces every double bit-for-bit.
struct PersistedModel {
    TrainedModel model;
    LossKind loss = LossKind::logistic;
    TransportCost cost;
};

void save_model(const std::string& path, const PersistedModel& pm);
PersistedModel load_model(const std::string& path);

// "%.17g" rendering shared by the model file and CSV/report writers.
std::string format_double(double value);

} // namespace ssldro
