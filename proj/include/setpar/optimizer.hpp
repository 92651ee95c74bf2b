#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace setpar {

/// sum_{i in indices} x_i <= bound. Index sets of different caps must be disjoint.
struct LinearCap {
    std::vector<int> indices;
    double bound = 0.0;
};

/// Box bounds plus linear caps. Upper bounds may be +infinity.
struct FeasibleRegion {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<LinearCap> caps;

    static constexpr double kDefaultEpsilon = 1e-3;

    /// (d1, a1, b1, d2, a2, b2): all >= eps, a1, b1, a2, b2 <= 1 - eps, a2 + b2 <= 1 - eps.
    static FeasibleRegion setpar(double eps = kDefaultEpsilon);
    /// (d, a, b) with a + b <= 1 - eps.
    static FeasibleRegion par(double eps = kDefaultEpsilon);
    /// (d1, a1, b1, d2, a2) for the upper regime without observation feedback.
    static FeasibleRegion setpar_b2_zero(double eps = kDefaultEpsilon);

    int dimension() const noexcept { return static_cast<int>(lower.size()); }

    /// Throws DomainError when the region is malformed or empty.
    void validate() const;
    bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
    /// Euclidean projection onto the region.
    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

enum class ConstraintKind { Lower, Upper, Cap };

struct ActiveConstraint {
    ConstraintKind kind = ConstraintKind::Lower;
    int index = 0;  // variable index for bounds, cap index for caps

    friend bool operator==(const ActiveConstraint&, const ActiveConstraint&) = default;
};

struct OptimSettings {
    double tol = 1e-8;
    int max_iter = 500;
    double armijo_slope = 1e-4;
    double contraction = 0.5;
};

struct OptimResult {
    Eigen::VectorXd argmax;
    double value = 0.0;
    /// || P(x + grad) - x ||_inf at argmax.
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Line search stopped because predicted ascent fell below the objective's rounding level.
    bool roundoff_limited = false;
    std::vector<ActiveConstraint> active;
    /// Objective value at every accepted iterate, start included.
    std::vector<double> value_history;
};

/// Returns f(x) and writes df/dx into grad (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Writes the Hessian of f at x (already sized).
using Curvature = std::function<void(const Eigen::VectorXd& x, Eigen::MatrixXd& hess)>;

/// Active-set ascent with Armijo backtracking. The model Hessian is a damped BFGS
/// approximation, or the exact curvature (eigenvalues flipped and floored to keep it
/// definite) when one is supplied.
/// Every iterate is feasible and the objective never decreases between accepted iterates.
OptimResult maximize(const Objective& objective, const FeasibleRegion& region,
                     const Eigen::VectorXd& start, const OptimSettings& settings = {},
                     const Curvature& curvature = {});

/// Runs maximize from each start; the best value wins, values closer than 1e-10 are
/// tied and resolved by the lexicographically smaller argmax.
OptimResult maximize_multistart(const Objective& objective, const FeasibleRegion& region,
                                std::span<const Eigen::VectorXd> starts,
                                const OptimSettings& settings = {},
                                const Curvature& curvature = {});

}  // namespace setpar
