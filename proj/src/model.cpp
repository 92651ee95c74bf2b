#include "setpar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "setpar/errors.hpp"
#include "setpar/random.hpp"

namespace setpar {

void RegimeParams::validate() const {
    if (!std::isfinite(d) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("regime coefficients must be finite");
    }
    if (d <= 0.0) throw DomainError("intercept d must be positive, got " + std::to_string(d));
    if (a < 0.0) throw DomainError("coefficient a must be nonnegative, got " + std::to_string(a));
    if (b < 0.0) throw DomainError("coefficient b must be nonnegative, got " + std::to_string(b));
}

SetparParams SetparParams::from_vector(Count r, const ParamVector& v) {
    return {r, {v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

ParamVector SetparParams::to_vector() const {
    ParamVector v;
    v << lower.d, lower.a, lower.b, upper.d, upper.a, upper.b;
    return v;
}

void SetparParams::validate() const {
    if (r < 0) throw DomainError("threshold r must be nonnegative");
    lower.validate();
    upper.validate();
}

double SetparParams::reachable_state() const {
    return lower.a < 1.0 ? lower.d / (1.0 - lower.a) : lower.d;
}

void MultiRegimeParams::validate() const {
    if (regimes.size() != thresholds.size() + 1) {
        throw DomainError("need exactly one more regime than finite thresholds");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] <= 0) throw DomainError("finite thresholds must be positive");
        if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
            throw DomainError("thresholds must be strictly increasing");
        }
    }
    for (const auto& p : regimes) p.validate();
}

std::size_t MultiRegimeParams::regime_index(Count y_prev) const noexcept {
    // Number of thresholds <= y_prev is the bin index of [r_{i}, r_{i+1}).
    return static_cast<std::size_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), y_prev) - thresholds.begin());
}

CountSeries::CountSeries(std::vector<Count> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] < 0) {
            throw DomainError("count at index " + std::to_string(i) + " is negative");
        }
    }
}

double CountSeries::mean() const {
    if (values_.empty()) throw DomainError("empty series has no mean");
    long double sum = 0;
    for (const auto v : values_) sum += static_cast<long double>(v);
    return static_cast<double>(sum / static_cast<long double>(values_.size()));
}

Count CountSeries::max() const {
    if (values_.empty()) throw DomainError("empty series has no maximum");
    return *std::max_element(values_.begin(), values_.end());
}

CountSeries CountSeries::slice(std::size_t first, std::size_t count) const {
    if (first > values_.size() || count > values_.size() - first) {
        throw DomainError("slice out of range");
    }
    const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(first);
    return CountSeries(std::vector<Count>(begin, begin + static_cast<std::ptrdiff_t>(count)));
}

double intensity_step(double lambda_prev, Count y_prev, const SetparParams& params) {
    if (!(lambda_prev > 0.0)) throw DomainError("previous intensity must be positive");
    return params.regime_for(y_prev).step(lambda_prev, y_prev);
}

double intensity_step_multi(double lambda_prev, Count y_prev, const MultiRegimeParams& params) {
    if (!(lambda_prev > 0.0)) throw DomainError("previous intensity must be positive");
    return params.regimes[params.regime_index(y_prev)].step(lambda_prev, y_prev);
}

IntensityPath intensity_path(const CountSeries& series, const SetparParams& params,
                             double lambda_init) {
    if (series.empty()) throw DomainError("intensity path of an empty series");
    if (!(lambda_init > 0.0)) throw DomainError("initial intensity must be positive");
    IntensityPath path;
    path.initial_value = lambda_init;
    path.values.resize(series.size());
    path.values[0] = lambda_init;
    for (std::size_t t = 1; t < series.size(); ++t) {
        path.values[t] = params.regime_for(series[t - 1]).step(path.values[t - 1], series[t - 1]);
    }
    return path;
}

namespace {

template <class Step>
SimulatedPath run_simulation(std::size_t n, std::uint64_t seed, std::size_t burn_in,
                             double lambda_init, Step&& step) {
    if (n == 0) throw DomainError("simulation length must be positive");
    if (!(lambda_init > 0.0)) throw DomainError("initial intensity must be positive");
    RandomStream rng(seed);
    std::vector<Count> ys;
    std::vector<double> lambdas;
    ys.reserve(n);
    lambdas.reserve(n);
    double lambda = lambda_init;
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        const Count y = sample_poisson(rng, lambda);
        if (t >= burn_in) {
            ys.push_back(y);
            lambdas.push_back(lambda);
        }
        lambda = step(lambda, y);
    }
    SimulatedPath out{CountSeries(std::move(ys)), IntensityPath{std::move(lambdas), 0.0}};
    out.intensity.initial_value = out.intensity.values.front();
    return out;
}

}  // namespace

SimulatedPath simulate(const SetparParams& params, std::size_t n, std::uint64_t seed,
                       const SimulationOptions& options) {
    params.validate();
    const double init = options.lambda_init > 0.0 ? options.lambda_init : params.reachable_state();
    return run_simulation(n, seed, options.burn_in, init, [&](double lambda, Count y) {
        return params.regime_for(y).step(lambda, y);
    });
}

SimulatedPath simulate_multi(const MultiRegimeParams& params, std::size_t n, std::uint64_t seed,
                             std::size_t burn_in, double lambda_init) {
    params.validate();
    return run_simulation(n, seed, burn_in, lambda_init, [&](double lambda, Count y) {
        return params.regimes[params.regime_index(y)].step(lambda, y);
    });
}

}  // namespace setpar
