#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace setpar {

/// Precondition violated by an argument (empty series, non-positive intensity,
/// infeasible start point, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Objective or recursion produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::vector<double> point)
        : std::runtime_error(what), point_(std::move(point)) {}

    const std::vector<double>& point() const noexcept { return point_; }

private:
    std::vector<double> point_;
};

/// A fixed threshold leaves one regime without any observation.
class IllPosedRegime : public std::runtime_error {
public:
    IllPosedRegime(const std::string& regime, long long threshold)
        : std::runtime_error("regime '" + regime + "' has no observations at threshold r = " +
                             std::to_string(threshold)),
          regime_(regime), threshold_(threshold) {}

    const std::string& regime() const noexcept { return regime_; }
    long long threshold() const noexcept { return threshold_; }

private:
    std::string regime_;
    long long threshold_;
};

/// No threshold candidate produced a usable fit.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace setpar
