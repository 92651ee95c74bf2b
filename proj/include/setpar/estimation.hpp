#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "setpar/model.hpp"
#include "setpar/optimizer.hpp"

namespace setpar {

enum class ModelKind { Par, Setpar, SetparB2Zero };

std::string to_string(ModelKind kind);
/// Accepts "par", "setpar", "setpar-b2zero".
ModelKind parse_model_kind(const std::string& name);

/// Number of free continuous parameters.
int parameter_count(ModelKind kind) noexcept;

/// Where the intensity recursion starts when no fixed value is given.
enum class LambdaInitPolicy { SampleMean, FirstObservation };

struct FitConfig {
    double alpha1 = 0.2;
    double alpha2 = 0.8;
    /// Explicit threshold candidates; replaces the quantile range when set.
    std::optional<std::vector<Count>> thresholds;
    /// Initial intensity for every likelihood evaluation; overrides the policy when set.
    std::optional<double> lambda_init;
    LambdaInitPolicy lambda_init_policy = LambdaInitPolicy::SampleMean;
    double epsilon = FeasibleRegion::kDefaultEpsilon;
    OptimSettings optim;
    /// Primary start plus (starts - 1) jittered copies of the moment start.
    int starts = 3;
    /// Start each threshold from the previous threshold's optimum.
    bool warm_start = true;
    /// Threads for the threshold grid; only used when warm_start is false.
    int workers = 1;
    /// Candidates with fewer observations in either regime are skipped.
    std::size_t min_regime_obs = 5;

    void validate() const;
};

/// The initial intensity a fit on `series` uses under `config`. A nonpositive
/// candidate (all-zero data, Y_1 = 0) falls back to epsilon.
double resolve_lambda_init(const CountSeries& series, const FitConfig& config);

/// Type-1 (inverse empirical CDF) quantiles of the series at alpha1 and alpha2.
std::pair<Count, Count> quantile_bounds(const CountSeries& series, double alpha1, double alpha2);

/// Number of Y_1..Y_{n-1} in the lower and upper regime at threshold r.
std::pair<std::size_t, std::size_t> regime_counts(const CountSeries& series, Count r);

struct ThresholdFit {
    Count r = 0;
    /// Free parameters in model order (3, 5 or 6 entries).
    Eigen::VectorXd theta;
    double loglik = 0.0;
    OptimResult optim;
};

struct ProfileEntry {
    Count r = 0;
    Eigen::VectorXd theta;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    double projected_gradient_norm = 0.0;
};

struct FitResult {
    ModelKind model = ModelKind::Setpar;
    SetparParams params;
    /// Free parameters at the optimum; standard_errors and g_hat follow the same order.
    Eigen::VectorXd theta;
    double loglik = 0.0;
    double lambda_init = 0.0;
    std::size_t n = 0;
    std::vector<ProfileEntry> profile;
    Eigen::MatrixXd g_hat;
    Eigen::MatrixXd g_hat_inv;
    /// sqrt(diag(g_hat_inv) / n); NaN when g_hat is singular.
    Eigen::VectorXd standard_errors;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = false;
    std::vector<std::string> warnings;

    int k() const noexcept { return parameter_count(model); }
    std::vector<std::string> parameter_names() const;
};

/// Moment-flavoured interior start: d = 0.1 * mean(Y), a = 0.5, b = 0.3 in each regime.
Eigen::VectorXd default_start(ModelKind kind, const CountSeries& series, double epsilon);

/// Maps free parameters of the given model back to two-regime parameters.
SetparParams expand_parameters(ModelKind kind, Count r, const Eigen::VectorXd& theta);

/// Maximises the likelihood at fixed r. Throws IllPosedRegime when a regime is never visited.
ThresholdFit fit_fixed_threshold(const CountSeries& series, Count r, const FitConfig& config,
                                 ModelKind kind = ModelKind::Setpar,
                                 const std::optional<Eigen::VectorXd>& warm = std::nullopt);

/// Two-step estimator: profile likelihood over the threshold grid, ties to the smallest r.
FitResult fit(const CountSeries& series, const FitConfig& config);
/// Single-regime Poisson autoregression with a + b <= 1 - eps.
FitResult fit_par(const CountSeries& series, const FitConfig& config);
/// Two-regime model with b2 fixed at zero.
FitResult fit_setpar_b2_zero(const CountSeries& series, const FitConfig& config);

FitResult fit_model(ModelKind kind, const CountSeries& series, const FitConfig& config);

}  // namespace setpar
