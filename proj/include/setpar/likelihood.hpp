#pragma once

#include "setpar/model.hpp"

namespace setpar {

/// lambda_t together with its gradient with respect to (d1, a1, b1, d2, a2, b2).
struct ScoreState {
    double lambda = 0.0;
    ParamVector dlam_dtheta = ParamVector::Zero();

    /// Starts the recursion at lambda_1 with a zero gradient.
    static ScoreState initial(double lambda_init);

    /// Moves from (lambda_{t-1}, dlambda_{t-1}) to time t given Y_{t-1}.
    void advance(Count y_prev, const SetparParams& params) noexcept;
};

using InfoMatrix = ParamMatrix;

/// Value and gradient of the conditional log-likelihood from a single pass.
struct LikelihoodEval {
    double loglik = 0.0;
    ParamVector score = ParamVector::Zero();
};

/// sum_t [ -lambda_t + Y_t log lambda_t ], the Y_t! constant dropped.
/// The t = 1 term uses lambda_1 = lambda_init.
double log_likelihood(const CountSeries& series, const SetparParams& params, double lambda_init);

/// sum_t (Y_t / lambda_t - 1) dlambda_t/dtheta at fixed threshold.
ParamVector score(const CountSeries& series, const SetparParams& params, double lambda_init);

LikelihoodEval evaluate(const CountSeries& series, const SetparParams& params, double lambda_init);

/// (1/n) sum_t lambda_t^{-1} (dlambda_t/dtheta)(dlambda_t/dtheta)^T.
InfoMatrix g_hat(const CountSeries& series, const SetparParams& params, double lambda_init);

/// Negative averaged Hessian of the log-likelihood, via the second-derivative recursion
///   d2lambda_t = a_{t-1} d2lambda_{t-1} + e_a dlambda_{t-1}^T + dlambda_{t-1} e_a^T
/// where e_a selects the a-coefficient of the regime active at t.
InfoMatrix observed_information(const CountSeries& series, const SetparParams& params,
                                double lambda_init);

}  // namespace setpar
