// Exception hierarchy shared by the whole toolkit.  The CLI maps these to
// process exit codes: config_error -> 2, data_error -> 3, numeric_error -> 4.

#pragma once

#include <stdexcept>
#include <string>

namespace ssldro {

// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: invalid flags, out-of-range parameters, size caps.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Malformed or inconsistent input data (CSV parse failures, dimension
// mismatches, invalid labels).
class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error(msg) {}
};

// Numerical failure: divergent iterations, singular systems, infeasible or
// non-convergent solves.
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

} // namespace ssldro
