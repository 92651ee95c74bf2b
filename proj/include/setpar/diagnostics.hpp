#pragma once

#include <span>
#include <vector>

#include "setpar/model.hpp"

namespace setpar {

/// Sample moments with central moments averaged by 1/n:
/// skewness m3 / m2^{3/2}, excess kurtosis m4 / m2^2 - 3, sd from the unbiased variance.
struct MomentSummary {
    double mean = 0.0;
    double standard_deviation = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

MomentSummary summarize(std::span<const double> values);

struct ResidualReport {
    std::vector<double> residuals;
    std::vector<double> fitted;
    MomentSummary summary;
};

/// (Y_t - lambda_t) / sqrt(lambda_t) along the fitted intensity path.
ResidualReport pearson_residuals(const CountSeries& series, const SetparParams& params,
                                 double lambda_init);

struct AcfReport {
    std::vector<double> values;  // lags 0..max_lag
    std::size_t n = 0;
    double band = 0.0;  // 1.96 / sqrt(n)
};

/// rho(h) = c(h) / c(0) with c(h) = (1/n) sum_{t<n-h} (x_t - mean)(x_{t+h} - mean).
/// A constant series has rho(h) = 0 for h >= 1.
AcfReport acf(std::span<const double> series, std::size_t max_lag);
AcfReport acf(const CountSeries& series, std::size_t max_lag);

/// Observation-driven one-step forecasts for horizon_series, which continues history.
/// The intensity is run through history with frozen parameters, then each forecast
/// uses every realised value up to the previous step.
std::vector<double> one_step_forecasts(const CountSeries& history, const SetparParams& params,
                                       double lambda_init, const CountSeries& horizon_series);

double mean_squared_error(std::span<const Count> observed, std::span<const double> predicted);

/// In-sample MSE of Y_t against the fitted intensity, t = 1 included.
double in_sample_mse(const CountSeries& series, const SetparParams& params, double lambda_init);

struct Overdispersion {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double ratio = 0.0;     // variance / mean, 0 when the mean is 0
};

Overdispersion overdispersion_summary(const CountSeries& series);

}  // namespace setpar
