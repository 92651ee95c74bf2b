#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace setpar {

using Count = std::int64_t;

/// Number of continuous parameters in a two-regime model: (d1, a1, b1, d2, a2, b2).
inline constexpr int kNumParams = 6;
using ParamVector = Eigen::Matrix<double, kNumParams, 1>;
using ParamMatrix = Eigen::Matrix<double, kNumParams, kNumParams>;

/// Coefficients of one regime: lambda_t = d + a * lambda_{t-1} + b * y_{t-1}.
struct RegimeParams {
    double d = 0.0;
    double a = 0.0;
    double b = 0.0;

    /// Throws DomainError unless d > 0, a >= 0, b >= 0 and all are finite.
    void validate() const;

    double step(double lambda_prev, Count y_prev) const noexcept {
        return d + a * lambda_prev + b * static_cast<double>(y_prev);
    }

    friend bool operator==(const RegimeParams&, const RegimeParams&) = default;
};

/// Two-regime model. The lower regime fires when y_{t-1} <= r, the upper one otherwise.
struct SetparParams {
    Count r = 0;
    RegimeParams lower;
    RegimeParams upper;

    /// Threshold value that routes every count to the lower regime.
    static constexpr Count kNoThreshold = std::numeric_limits<Count>::max();

    /// Single-regime Poisson autoregression embedded as a two-regime model.
    static SetparParams single_regime(const RegimeParams& p) { return {kNoThreshold, p, p}; }

    /// Rebuilds parameters from (d1, a1, b1, d2, a2, b2).
    static SetparParams from_vector(Count r, const ParamVector& v);
    ParamVector to_vector() const;

    void validate() const;

    bool in_lower(Count y_prev) const noexcept { return y_prev <= r; }
    const RegimeParams& regime_for(Count y_prev) const noexcept {
        return in_lower(y_prev) ? lower : upper;
    }

    /// a1 < 1 and a2 + b2 < 1: unique invariant measure and finite moments.
    bool is_stable() const noexcept { return lower.a < 1.0 && upper.a + upper.b < 1.0; }

    /// Fixed point of the lower regime fed with y = 0: d1 / (1 - a1).
    double reachable_state() const;

    friend bool operator==(const SetparParams&, const SetparParams&) = default;
};

/// Regimes separated by strictly increasing thresholds r_1 < ... < r_{m-1}.
/// Regime i (0-based) applies when y_{t-1} lies in the half-open bin [r_i, r_{i+1})
/// with r_0 = 0 and r_m = infinity. This differs from SetparParams at the boundary:
/// there a count equal to r stays in the lower regime.
struct MultiRegimeParams {
    std::vector<Count> thresholds;
    std::vector<RegimeParams> regimes;

    void validate() const;
    std::size_t regime_index(Count y_prev) const noexcept;
};

/// Observed counts Y_1..Y_n, n >= 1, every element nonnegative.
class CountSeries {
public:
    CountSeries() = default;
    explicit CountSeries(std::vector<Count> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    Count operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const Count> values() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    double mean() const;
    Count max() const;

    /// Elements [first, first + count).
    CountSeries slice(std::size_t first, std::size_t count) const;

    friend bool operator==(const CountSeries&, const CountSeries&) = default;

private:
    std::vector<Count> values_;
};

/// lambda_1..lambda_n aligned with a CountSeries.
struct IntensityPath {
    std::vector<double> values;
    double initial_value = 0.0;
};

struct SimulatedPath {
    CountSeries series;
    IntensityPath intensity;
};

double intensity_step(double lambda_prev, Count y_prev, const SetparParams& params);
double intensity_step_multi(double lambda_prev, Count y_prev, const MultiRegimeParams& params);

/// lambda_1 = lambda_init, lambda_t = intensity_step(lambda_{t-1}, Y_{t-1}) for t >= 2.
IntensityPath intensity_path(const CountSeries& series, const SetparParams& params,
                             double lambda_init);

struct SimulationOptions {
    std::size_t burn_in = 500;
    /// Defaults to the reachable state d1 / (1 - a1), or d1 when a1 >= 1.
    double lambda_init = 0.0;
};

/// Draws Y_t ~ Poisson(lambda_t) and advances lambda with intensity_step.
/// The first burn_in pairs are discarded. Output depends only on the arguments.
SimulatedPath simulate(const SetparParams& params, std::size_t n, std::uint64_t seed,
                       const SimulationOptions& options = {});

SimulatedPath simulate_multi(const MultiRegimeParams& params, std::size_t n, std::uint64_t seed,
                             std::size_t burn_in, double lambda_init);

}  // namespace setpar
