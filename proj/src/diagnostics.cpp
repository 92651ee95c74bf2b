#include "setpar/diagnostics.hpp"

#include <cmath>

#include "setpar/errors.hpp"

namespace setpar {

MomentSummary summarize(std::span<const double> values) {
    if (values.size() < 2) throw DomainError("moment summary needs at least two values");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= n;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (const double v : values) {
        const double c = v - mean;
        const double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    MomentSummary s;
    s.mean = mean;
    s.standard_deviation = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

ResidualReport pearson_residuals(const CountSeries& series, const SetparParams& params,
                                 double lambda_init) {
    const IntensityPath path = intensity_path(series, params, lambda_init);
    ResidualReport report;
    report.fitted = path.values;
    report.residuals.resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double lam = path.values[t];
        report.residuals[t] = (static_cast<double>(series[t]) - lam) / std::sqrt(lam);
    }
    if (report.residuals.size() >= 2) report.summary = summarize(report.residuals);
    return report;
}

AcfReport acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (max_lag == 0) throw DomainError("max_lag must be positive");
    if (max_lag >= n) throw DomainError("max_lag must be smaller than the series length");
    double mean = 0.0;
    for (const double v : series) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    for (std::size_t t = 0; t < n; ++t) centered[t] = series[t] - mean;
    auto autocov = [&](std::size_t h) {
        double s = 0.0;
        for (std::size_t t = 0; t + h < n; ++t) s += centered[t] * centered[t + h];
        return s / static_cast<double>(n);
    };

    AcfReport report;
    report.n = n;
    report.band = 1.96 / std::sqrt(static_cast<double>(n));
    report.values.assign(max_lag + 1, 0.0);
    report.values[0] = 1.0;
    const double c0 = autocov(0);
    if (c0 > 0.0) {
        for (std::size_t h = 1; h <= max_lag; ++h) report.values[h] = autocov(h) / c0;
    }
    return report;
}

AcfReport acf(const CountSeries& series, std::size_t max_lag) {
    std::vector<double> x(series.begin(), series.end());
    return acf(x, max_lag);
}

std::vector<double> one_step_forecasts(const CountSeries& history, const SetparParams& params,
                                       double lambda_init, const CountSeries& horizon_series) {
    if (horizon_series.empty()) throw DomainError("forecast horizon is empty");
    const IntensityPath path = intensity_path(history, params, lambda_init);
    double lambda = path.values.back();
    Count y_prev = history[history.size() - 1];
    std::vector<double> out;
    out.reserve(horizon_series.size());
    for (const Count y : horizon_series) {
        lambda = intensity_step(lambda, y_prev, params);
        out.push_back(lambda);
        y_prev = y;
    }
    return out;
}

double mean_squared_error(std::span<const Count> observed, std::span<const double> predicted) {
    if (observed.empty() || observed.size() != predicted.size()) {
        throw DomainError("MSE needs equally sized nonempty sequences");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = static_cast<double>(observed[i]) - predicted[i];
        s += e * e;
    }
    return s / static_cast<double>(observed.size());
}

double in_sample_mse(const CountSeries& series, const SetparParams& params, double lambda_init) {
    const IntensityPath path = intensity_path(series, params, lambda_init);
    return mean_squared_error(series.values(), path.values);
}

Overdispersion overdispersion_summary(const CountSeries& series) {
    if (series.size() < 2) throw DomainError("overdispersion needs at least two observations");
    const double mean = series.mean();
    double ss = 0.0;
    for (const Count y : series) {
        const double c = static_cast<double>(y) - mean;
        ss += c * c;
    }
    Overdispersion out;
    out.mean = mean;
    out.variance = ss / static_cast<double>(series.size() - 1);
    out.ratio = mean > 0.0 ? out.variance / mean : 0.0;
    return out;
}

}  // namespace setpar
