#pragma once

#include <stdexcept>
#include <string>

namespace circforest {

/// Malformed or unusable input data (CSV parse failures, empty results, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Estimation cannot proceed (all-zero weights, too few observations, ...).
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An observation cannot be routed through a fitted model (missing split variable).
class RoutingError : public std::runtime_error {
public:
    explicit RoutingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace circforest
