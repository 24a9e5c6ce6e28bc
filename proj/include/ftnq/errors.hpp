#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ftnq {

/// A numeric parameter is outside its mathematical domain (negative bandwidth, roll-off > 1, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration: mismatched grids, odd L, unknown names, malformed config files.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector or matrix of the wrong size handed to a model operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An estimator declined to run (enumeration too large, unsupported covariance structure).
class EstimatorRefusal : public std::runtime_error {
public:
    EstimatorRefusal(const std::string& what, std::uint64_t required, std::uint64_t budget)
        : std::runtime_error(what), required_(required), budget_(budget) {}

    std::uint64_t required() const noexcept { return required_; }
    std::uint64_t budget() const noexcept { return budget_; }

private:
    std::uint64_t required_;
    std::uint64_t budget_;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}

    double achieved_tolerance() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Two result sets that should share a parameter grid do not.
class GridMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ftnq
