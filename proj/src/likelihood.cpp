#include "setpar/likelihood.hpp"

#include <cmath>

#include "setpar/errors.hpp"

namespace setpar {

namespace {

void check_inputs(const CountSeries& series, double lambda_init) {
    if (series.empty()) throw DomainError("likelihood of an empty series");
    if (!(lambda_init > 0.0) || !std::isfinite(lambda_init)) {
        throw DomainError("initial intensity must be positive and finite");
    }
}

// Offset of the regime's (d, a, b) block inside the parameter vector.
constexpr int block_offset(bool lower) noexcept { return lower ? 0 : 3; }

}  // namespace

ScoreState ScoreState::initial(double lambda_init) {
    return {lambda_init, ParamVector::Zero()};
}

void ScoreState::advance(Count y_prev, const SetparParams& params) noexcept {
    const bool lower = params.in_lower(y_prev);
    const RegimeParams& p = lower ? params.lower : params.upper;
    const int off = block_offset(lower);
    const double lambda_prev = lambda;
    dlam_dtheta *= p.a;
    dlam_dtheta[off] += 1.0;
    dlam_dtheta[off + 1] += lambda_prev;
    dlam_dtheta[off + 2] += static_cast<double>(y_prev);
    lambda = p.step(lambda_prev, y_prev);
}

double log_likelihood(const CountSeries& series, const SetparParams& params, double lambda_init) {
    check_inputs(series, lambda_init);
    double lambda = lambda_init;
    double sum = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (t > 0) lambda = params.regime_for(series[t - 1]).step(lambda, series[t - 1]);
        const auto y = static_cast<double>(series[t]);
        sum += -lambda + (series[t] == 0 ? 0.0 : y * std::log(lambda));
    }
    return sum;
}

LikelihoodEval evaluate(const CountSeries& series, const SetparParams& params, double lambda_init) {
    check_inputs(series, lambda_init);
    LikelihoodEval out;
    ScoreState state = ScoreState::initial(lambda_init);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (t > 0) state.advance(series[t - 1], params);
        const auto y = static_cast<double>(series[t]);
        out.loglik += -state.lambda + (series[t] == 0 ? 0.0 : y * std::log(state.lambda));
        out.score.noalias() += (y / state.lambda - 1.0) * state.dlam_dtheta;
    }
    return out;
}

ParamVector score(const CountSeries& series, const SetparParams& params, double lambda_init) {
    return evaluate(series, params, lambda_init).score;
}

InfoMatrix g_hat(const CountSeries& series, const SetparParams& params, double lambda_init) {
    check_inputs(series, lambda_init);
    InfoMatrix g = InfoMatrix::Zero();
    ScoreState state = ScoreState::initial(lambda_init);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (t > 0) state.advance(series[t - 1], params);
        g.selfadjointView<Eigen::Lower>().rankUpdate(state.dlam_dtheta, 1.0 / state.lambda);
    }
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g / static_cast<double>(series.size());
}

InfoMatrix observed_information(const CountSeries& series, const SetparParams& params,
                                double lambda_init) {
    check_inputs(series, lambda_init);
    InfoMatrix hess_sum = InfoMatrix::Zero();
    InfoMatrix d2lam = InfoMatrix::Zero();
    ScoreState state = ScoreState::initial(lambda_init);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (t > 0) {
            const Count y_prev = series[t - 1];
            const bool lower = params.in_lower(y_prev);
            const int a_index = block_offset(lower) + 1;
            const double a = lower ? params.lower.a : params.upper.a;
            // Uses the gradient at t-1, so update before advancing the state.
            d2lam *= a;
            d2lam.row(a_index) += state.dlam_dtheta.transpose();
            d2lam.col(a_index) += state.dlam_dtheta;
            state.advance(y_prev, params);
        }
        const auto y = static_cast<double>(series[t]);
        const double lam = state.lambda;
        hess_sum += (y / lam - 1.0) * d2lam;
        hess_sum -= (y / (lam * lam)) * (state.dlam_dtheta * state.dlam_dtheta.transpose());
    }
    return -hess_sum / static_cast<double>(series.size());
}

}  // namespace setpar
