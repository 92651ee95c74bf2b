#include "setpar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "setpar/errors.hpp"
#include "setpar/likelihood.hpp"
#include "setpar/random.hpp"


namespace setpar {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Positions of the free parameters inside (d1, a1, b1, d2, a2, b2).
std::vector<int> free_indices(ModelKind kind) {
    switch (kind) {
        case ModelKind::Par: return {0, 1, 2};
        case ModelKind::Setpar: return {0, 1, 2, 3, 4, 5};
        case ModelKind::SetparB2Zero: return {0, 1, 2, 3, 4};
    }
    return {};
}

FeasibleRegion region_for(ModelKind kind, double eps) {
    switch (kind) {
        case ModelKind::Par: return FeasibleRegion::par(eps);
        case ModelKind::Setpar: return FeasibleRegion::setpar(eps);
        case ModelKind::SetparB2Zero: return FeasibleRegion::setpar_b2_zero(eps);
    }
    return FeasibleRegion::setpar(eps);
}

// Multiplicative jitter of the moment start; fixed stream so fits stay deterministic.
VectorXd jittered(const VectorXd& base, int copy, const FeasibleRegion& region) {
    RandomStream rng(derive_seed(0x5E7A0C0FFEEULL, {static_cast<std::uint64_t>(copy)}));
    VectorXd x = base;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] *= std::exp(0.6 * (rng.uniform() - 0.5));
    return region.project(x);
}

void attach_information(FitResult& out, const CountSeries& series) {
    const auto idx = free_indices(out.model);
    const int k = static_cast<int>(idx.size());
    const InfoMatrix full = g_hat(series, out.params, out.lambda_init);
    out.g_hat.resize(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) out.g_hat(i, j) = full(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.g_hat);
    const double top = eig.eigenvalues().maxCoeff();
    const double bottom = eig.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-13 * top) {
        out.g_hat_inv = MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
        out.standard_errors = VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
        out.warnings.push_back("information matrix is singular; standard errors unavailable");
        return;
    }
    out.g_hat_inv = out.g_hat.llt().solve(MatrixXd::Identity(k, k));
    out.g_hat_inv = 0.5 * (out.g_hat_inv + out.g_hat_inv.transpose()).eval();
    out.standard_errors =
        (out.g_hat_inv.diagonal().array() / static_cast<double>(out.n)).cwiseMax(0.0).sqrt().matrix();
}

void attach_criteria(FitResult& out) {
    const double k = out.k();
    out.aic = -2.0 * out.loglik + 2.0 * k;
    out.bic = -2.0 * out.loglik + k * std::log(static_cast<double>(out.n));
}

FitResult finish(ModelKind kind, const CountSeries& series, const ThresholdFit& best,
                 double lambda_init) {
    FitResult out;
    out.model = kind;
    out.n = series.size();
    out.lambda_init = lambda_init;
    out.params = expand_parameters(kind, best.r, best.theta);
    out.theta = best.theta;
    out.loglik = best.loglik;
    out.converged = best.optim.converged;
    attach_information(out, series);
    attach_criteria(out);
    return out;
}

FitResult fit_threshold_grid(ModelKind kind, const CountSeries& series, const FitConfig& config) {
    config.validate();
    if (series.size() < 2) throw DomainError("threshold models need at least two observations");
    const double lambda_init = resolve_lambda_init(series, config);
    FitConfig cfg = config;
    cfg.lambda_init = lambda_init;

    std::vector<Count> candidates;
    if (config.thresholds) {
        candidates = *config.thresholds;
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    } else {
        const auto [q1, q2] = quantile_bounds(series, config.alpha1, config.alpha2);
        for (Count r = q1; r <= q2; ++r) candidates.push_back(r);
    }
    if (candidates.empty()) throw EstimationError("no threshold candidates");

    std::vector<std::string> warnings;
    std::vector<Count> usable;
    for (const Count r : candidates) {
        if (r < 0) throw DomainError("threshold candidates must be nonnegative");
        const auto [lo, hi] = regime_counts(series, r);
        if (lo < config.min_regime_obs || hi < config.min_regime_obs) {
            warnings.push_back("threshold " + std::to_string(r) + " skipped: regime sizes " +
                               std::to_string(lo) + "/" + std::to_string(hi));
            continue;
        }
        usable.push_back(r);
    }
    if (usable.empty()) {
        throw EstimationError("every threshold candidate leaves a regime with fewer than " +
                              std::to_string(config.min_regime_obs) + " observations");
    }

    std::vector<ThresholdFit> fits(usable.size());
    std::vector<std::exception_ptr> errors(usable.size());
    const bool parallel = !config.warm_start && config.workers > 1;
    if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(config.workers)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(usable.size()); ++i) {
            try {
                fits[static_cast<std::size_t>(i)] =
                    fit_fixed_threshold(series, usable[static_cast<std::size_t>(i)], cfg, kind);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
        std::optional<VectorXd> warm;
        for (std::size_t i = 0; i < usable.size(); ++i) {
            try {
                fits[i] = fit_fixed_threshold(series, usable[i], cfg, kind,
                                              config.warm_start ? warm : std::nullopt);
                warm = fits[i].theta;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    }

    // Numeric failures at one candidate should not sink the grid.
    std::vector<ProfileEntry> profile;
    std::size_t best = fits.size();
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                warnings.push_back("threshold " + std::to_string(usable[i]) + " failed: " + e.what());
            }
            continue;
        }
        const auto& f = fits[i];
        profile.push_back({f.r, f.theta, f.loglik, f.optim.converged, f.optim.iterations,
                           f.optim.projected_gradient_norm});
        if (best == fits.size() || f.loglik > fits[best].loglik + 1e-10) best = i;
    }
    if (best == fits.size()) throw EstimationError("every threshold candidate failed");

    FitResult out = finish(kind, series, fits[best], lambda_init);
    out.profile = std::move(profile);
    out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
    return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Par: return "par";
        case ModelKind::Setpar: return "setpar";
        case ModelKind::SetparB2Zero: return "setpar-b2zero";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "par") return ModelKind::Par;
    if (name == "setpar") return ModelKind::Setpar;
    if (name == "setpar-b2zero") return ModelKind::SetparB2Zero;
    throw DomainError("unknown model '" + name + "' (expected par, setpar or setpar-b2zero)");
}

int parameter_count(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Par: return 3;
        case ModelKind::Setpar: return 6;
        case ModelKind::SetparB2Zero: return 5;
    }
    return 0;
}

std::vector<std::string> FitResult::parameter_names() const {
    static const std::vector<std::string> all{"d1", "a1", "b1", "d2", "a2", "b2"};
    std::vector<std::string> out;
    for (const int i : free_indices(model)) out.push_back(all[static_cast<std::size_t>(i)]);
    return out;
}

double resolve_lambda_init(const CountSeries& series, const FitConfig& config) {
    if (series.empty()) throw DomainError("series is empty");
    double init = 0.0;
    if (config.lambda_init) {
        init = *config.lambda_init;
    } else if (config.lambda_init_policy == LambdaInitPolicy::FirstObservation) {
        init = static_cast<double>(series[0]);
    } else {
        init = series.mean();
    }
    return init > 0.0 ? init : config.epsilon;
}

void FitConfig::validate() const {
    if (!(alpha1 > 0.0 && alpha1 < 1.0 && alpha2 > 0.0 && alpha2 < 1.0)) {
        throw DomainError("quantile levels must lie in (0, 1)");
    }
    if (!(alpha1 < alpha2)) throw DomainError("alpha1 must be smaller than alpha2");
    if (thresholds && thresholds->empty()) throw DomainError("explicit threshold set is empty");
    if (lambda_init && !(*lambda_init > 0.0)) throw DomainError("lambda_init must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0 / 3.0)) throw DomainError("epsilon must lie in (0, 1/3)");
    if (starts < 1) throw DomainError("need at least one optimizer start");
    if (workers < 1) throw DomainError("workers must be positive");
}

std::pair<Count, Count> quantile_bounds(const CountSeries& series, double alpha1, double alpha2) {
    if (series.empty()) throw DomainError("quantiles of an empty series");
    std::vector<Count> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    // Smallest y with F_n(y) >= alpha, i.e. the ceil(n * alpha)-th order statistic.
    auto q = [&](double alpha) {
        const double pos = std::ceil(n * alpha - 1e-12);
        const auto k = static_cast<std::size_t>(std::clamp(pos, 1.0, n));
        return sorted[k - 1];
    };
    return {q(alpha1), q(alpha2)};
}

std::pair<std::size_t, std::size_t> regime_counts(const CountSeries& series, Count r) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t t = 0; t + 1 < series.size(); ++t) (series[t] <= r ? lo : hi) += 1;
    return {lo, hi};
}

VectorXd default_start(ModelKind kind, const CountSeries& series, double epsilon) {
    const double d = std::max(0.5 * series.mean() * (1.0 - 0.5 - 0.3), 2.0 * epsilon);
    VectorXd full(6);
    full << d, 0.5, 0.3, d, 0.5, 0.3;
    const auto idx = free_indices(kind);
    VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[idx[i]];
    return out;
}

SetparParams expand_parameters(ModelKind kind, Count r, const VectorXd& theta) {
    if (theta.size() != parameter_count(kind)) throw DomainError("parameter vector has the wrong size");
    switch (kind) {
        case ModelKind::Par:
            return SetparParams::single_regime({theta[0], theta[1], theta[2]});
        case ModelKind::Setpar:
            return {r, {theta[0], theta[1], theta[2]}, {theta[3], theta[4], theta[5]}};
        case ModelKind::SetparB2Zero:
            return {r, {theta[0], theta[1], theta[2]}, {theta[3], theta[4], 0.0}};
    }
    throw DomainError("unknown model kind");
}

ThresholdFit fit_fixed_threshold(const CountSeries& series, Count r, const FitConfig& config,
                                 ModelKind kind, const std::optional<VectorXd>& warm) {
    config.validate();
    if (series.empty()) throw DomainError("cannot fit an empty series");
    if (kind != ModelKind::Par) {
        if (r < 0) throw DomainError("threshold must be nonnegative");
        const auto [lo, hi] = regime_counts(series, r);
        if (lo == 0) throw IllPosedRegime("lower", r);
        if (hi == 0) throw IllPosedRegime("upper", r);
    }
    const Count threshold = kind == ModelKind::Par ? SetparParams::kNoThreshold : r;
    const double lambda_init = resolve_lambda_init(series, config);
    const auto idx = free_indices(kind);
    const double inv_n = 1.0 / static_cast<double>(series.size());

    // Mean log-likelihood keeps the gradient scale independent of n.
    const Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
        const auto eval = evaluate(series, expand_parameters(kind, threshold, theta), lambda_init);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            grad[static_cast<Eigen::Index>(i)] = eval.score[idx[i]] * inv_n;
        }
        return eval.loglik * inv_n;
    };
    // observed_information is already averaged over t and sign-flipped.
    const Curvature curvature = [&](const VectorXd& theta, MatrixXd& hess) {
        const InfoMatrix info =
            observed_information(series, expand_parameters(kind, threshold, theta), lambda_init);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < idx.size(); ++j) {
                hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -info(idx[i], idx[j]);
            }
        }
    };

    const FeasibleRegion region = region_for(kind, config.epsilon);
    const VectorXd base = default_start(kind, series, config.epsilon);
    std::vector<VectorXd> starts;
    starts.push_back(warm && region.contains(*warm) ? *warm : base);
    for (int c = 1; c < config.starts; ++c) starts.push_back(jittered(base, c, region));

    ThresholdFit out;
    out.r = threshold;
    out.optim = maximize_multistart(objective, region, starts, config.optim, curvature);
    out.theta = out.optim.argmax;
    out.loglik = log_likelihood(series, expand_parameters(kind, threshold, out.theta), lambda_init);
    return out;
}

FitResult fit(const CountSeries& series, const FitConfig& config) {
    return fit_threshold_grid(ModelKind::Setpar, series, config);
}

FitResult fit_setpar_b2_zero(const CountSeries& series, const FitConfig& config) {
    return fit_threshold_grid(ModelKind::SetparB2Zero, series, config);
}

FitResult fit_par(const CountSeries& series, const FitConfig& config) {
    config.validate();
    const double lambda_init = resolve_lambda_init(series, config);
    FitConfig cfg = config;
    cfg.lambda_init = lambda_init;
    const ThresholdFit f = fit_fixed_threshold(series, 0, cfg, ModelKind::Par);
    return finish(ModelKind::Par, series, f, lambda_init);
}

FitResult fit_model(ModelKind kind, const CountSeries& series, const FitConfig& config) {
    switch (kind) {
        case ModelKind::Par: return fit_par(series, config);
        case ModelKind::Setpar: return fit(series, config);
        case ModelKind::SetparB2Zero: return fit_setpar_b2_zero(series, config);
    }
    throw DomainError("unknown model kind");
}

}  // namespace setpar
