#include "setpar/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "setpar/errors.hpp"

namespace setpar {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxBacktracks = 60;
// Accepted steps in a row that change the objective by less than its rounding level.
constexpr int kMaxFlatSteps = 5;

struct ConstraintRow {
    ActiveConstraint id;
    VectorXd a;  // a^T x <= b
    double b = 0.0;
};

std::vector<ConstraintRow> constraint_rows(const FeasibleRegion& region) {
    const int n = region.dimension();
    std::vector<ConstraintRow> rows;
    for (int i = 0; i < n; ++i) {
        ConstraintRow lo{{ConstraintKind::Lower, i}, VectorXd::Zero(n), -region.lower[i]};
        lo.a[i] = -1.0;
        rows.push_back(std::move(lo));
        if (std::isfinite(region.upper[i])) {
            ConstraintRow up{{ConstraintKind::Upper, i}, VectorXd::Zero(n), region.upper[i]};
            up.a[i] = 1.0;
            rows.push_back(std::move(up));
        }
    }
    for (std::size_t k = 0; k < region.caps.size(); ++k) {
        ConstraintRow cap{{ConstraintKind::Cap, static_cast<int>(k)}, VectorXd::Zero(n),
                          region.caps[k].bound};
        for (const int i : region.caps[k].indices) cap.a[i] = 1.0;
        rows.push_back(std::move(cap));
    }
    return rows;
}

double slack(const ConstraintRow& row, const VectorXd& x) { return row.b - row.a.dot(x); }

bool is_tight(const ConstraintRow& row, const VectorXd& x) {
    return slack(row, x) <= 1e-12 * (1.0 + std::fabs(row.b));
}

std::vector<double> to_std(const VectorXd& x) { return {x.data(), x.data() + x.size()}; }

// |H| with eigenvalues floored relative to the largest one.
MatrixXd definite_part(const MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (h + h.transpose()));
    VectorXd ev = eig.eigenvalues().cwiseAbs();
    const double floor = std::max(ev.maxCoeff() * 1e-10, 1e-300);
    ev = ev.cwiseMax(floor);
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

// Working set of constraints treated as equalities.
class WorkingSet {
public:
    explicit WorkingSet(const std::vector<ConstraintRow>& rows) : rows_(rows) {}

    const std::vector<std::size_t>& members() const { return members_; }
    bool contains(std::size_t j) const {
        return std::find(members_.begin(), members_.end(), j) != members_.end();
    }

    // Adds j if it is linearly independent of the current members.
    bool add(std::size_t j) {
        if (contains(j)) return false;
        const int n = static_cast<int>(rows_[j].a.size());
        MatrixXd a(static_cast<int>(members_.size()) + 1, n);
        for (std::size_t k = 0; k < members_.size(); ++k) a.row(static_cast<int>(k)) = rows_[members_[k]].a.transpose();
        a.row(a.rows() - 1) = rows_[j].a.transpose();
        Eigen::FullPivLU<MatrixXd> lu(a);
        if (lu.rank() < a.rows()) return false;
        members_.push_back(j);
        return true;
    }

    void remove_at(std::size_t k) { members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(k)); }
    void insert_at(std::size_t k, std::size_t j) {
        members_.insert(members_.begin() + static_cast<std::ptrdiff_t>(k), j);
    }

    // Equality-constrained quasi-Newton step for minimisation:
    //   B p + A^T mu = -g,  A p = 0.
    void solve(const MatrixXd& hess, const VectorXd& g, VectorXd& p, VectorXd& mu) const {
        const int n = static_cast<int>(g.size());
        const int m = static_cast<int>(members_.size());
        MatrixXd kkt = MatrixXd::Zero(n + m, n + m);
        kkt.topLeftCorner(n, n) = hess;
        for (int k = 0; k < m; ++k) {
            kkt.block(n + k, 0, 1, n) = rows_[members_[k]].a.transpose();
            kkt.block(0, n + k, n, 1) = rows_[members_[k]].a;
        }
        VectorXd rhs = VectorXd::Zero(n + m);
        rhs.head(n) = -g;
        const VectorXd sol = kkt.fullPivLu().solve(rhs);
        p = sol.head(n);
        mu = sol.tail(m);
    }

private:
    const std::vector<ConstraintRow>& rows_;
    std::vector<std::size_t> members_;
};

}  // namespace

FeasibleRegion FeasibleRegion::setpar(double eps) {
    FeasibleRegion r;
    r.lower = VectorXd::Constant(6, eps);
    r.upper.resize(6);
    r.upper << kInf, 1.0 - eps, 1.0 - eps, kInf, 1.0 - eps, 1.0 - eps;
    r.caps.push_back({{4, 5}, 1.0 - eps});
    return r;
}

FeasibleRegion FeasibleRegion::par(double eps) {
    FeasibleRegion r;
    r.lower = VectorXd::Constant(3, eps);
    r.upper.resize(3);
    r.upper << kInf, 1.0 - eps, 1.0 - eps;
    r.caps.push_back({{1, 2}, 1.0 - eps});
    return r;
}

FeasibleRegion FeasibleRegion::setpar_b2_zero(double eps) {
    FeasibleRegion r;
    r.lower = VectorXd::Constant(5, eps);
    r.upper.resize(5);
    r.upper << kInf, 1.0 - eps, 1.0 - eps, kInf, 1.0 - eps;
    return r;
}

void FeasibleRegion::validate() const {
    const int n = dimension();
    if (n == 0 || upper.size() != n) throw DomainError("region bounds must be nonempty and of equal length");
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(lower[i])) throw DomainError("lower bounds must be finite");
        if (!(lower[i] <= upper[i])) throw DomainError("lower bound exceeds upper bound at index " + std::to_string(i));
    }
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (const auto& cap : caps) {
        double min_sum = 0.0;
        for (const int i : cap.indices) {
            if (i < 0 || i >= n) throw DomainError("cap index out of range");
            if (used[static_cast<std::size_t>(i)]) throw DomainError("cap index sets must be disjoint");
            used[static_cast<std::size_t>(i)] = true;
            min_sum += lower[i];
        }
        if (min_sum > cap.bound) throw DomainError("linear cap excludes every point of the box");
    }
}

bool FeasibleRegion::contains(const VectorXd& x, double slack_tol) const {
    if (x.size() != dimension() || !x.allFinite()) return false;
    for (int i = 0; i < dimension(); ++i) {
        if (x[i] < lower[i] - slack_tol || x[i] > upper[i] + slack_tol) return false;
    }
    for (const auto& cap : caps) {
        double s = 0.0;
        for (const int i : cap.indices) s += x[i];
        if (s > cap.bound + slack_tol) return false;
    }
    return true;
}

VectorXd FeasibleRegion::project(const VectorXd& x) const {
    VectorXd z = x.cwiseMax(lower).cwiseMin(upper);
    for (const auto& cap : caps) {
        auto sum_at = [&](double shift) {
            double s = 0.0;
            for (const int i : cap.indices) s += std::clamp(x[i] - shift, lower[i], upper[i]);
            return s;
        };
        if (sum_at(0.0) <= cap.bound) continue;
        // The capped sum is nonincreasing in the shift; bisect for equality.
        double lo = 0.0;
        double hi = 1.0;
        while (sum_at(hi) > cap.bound) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (sum_at(mid) > cap.bound ? lo : hi) = mid;
        }
        for (const int i : cap.indices) z[i] = std::clamp(x[i] - hi, lower[i], upper[i]);
    }
    return z;
}

OptimResult maximize(const Objective& objective, const FeasibleRegion& region, const VectorXd& start,
                     const OptimSettings& settings, const Curvature& curvature) {
    region.validate();
    const int n = region.dimension();
    if (start.size() != n) throw DomainError("start point has the wrong dimension");
    if (!region.contains(start, 1e-10)) throw DomainError("start point is outside the feasible region");
    if (!(settings.tol > 0.0) || settings.max_iter <= 0) throw DomainError("invalid optimizer settings");

    // Internally minimise phi = -f.
    auto eval = [&](const VectorXd& x, VectorXd& grad_phi) {
        VectorXd grad_f = VectorXd::Zero(n);
        const double f = objective(x, grad_f);
        if (!std::isfinite(f) || !grad_f.allFinite()) {
            throw NumericError("objective is not finite at an iterate", to_std(x));
        }
        grad_phi = -grad_f;
        return -f;
    };
    auto projected_gradient = [&](const VectorXd& x, const VectorXd& grad_phi) {
        return (region.project(x - grad_phi) - x).lpNorm<Eigen::Infinity>();
    };

    const auto rows = constraint_rows(region);
    WorkingSet working(rows);

    VectorXd x = region.project(start);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (is_tight(rows[j], x)) working.add(j);
    }

    VectorXd g;
    double phi = eval(x, g);
    MatrixXd hess = MatrixXd::Identity(n, n);
    bool hess_is_fresh = true;
    bool scaled = false;
    const bool exact = static_cast<bool>(curvature);
    MatrixXd hess_f(n, n);
    auto evaluate_curvature = [&] {
        hess_f.setZero();
        curvature(x, hess_f);
        if (!hess_f.allFinite()) throw NumericError("curvature is not finite at an iterate", to_std(x));
    };
    // Exact curvature on the null space of the working set, made definite there;
    // identity on its complement.
    auto exact_model = [&] {
        const auto& members = working.members();
        MatrixXd z = MatrixXd::Identity(n, n);
        if (!members.empty()) {
            MatrixXd at(n, static_cast<Eigen::Index>(members.size()));
            for (std::size_t k = 0; k < members.size(); ++k) {
                at.col(static_cast<Eigen::Index>(k)) = rows[members[k]].a;
            }
            Eigen::ColPivHouseholderQR<MatrixXd> qr(at);
            const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
            z = q.rightCols(n - qr.rank());
        }
        hess = MatrixXd::Identity(n, n) - z * z.transpose();
        if (z.cols() > 0) hess += z * definite_part(-z.transpose() * hess_f * z) * z.transpose();
    };
    if (exact) evaluate_curvature();
    int flat_steps = 0;

    OptimResult result;
    result.value_history.push_back(-phi);

    int iter = 0;
    for (; iter < settings.max_iter; ++iter) {
        if (projected_gradient(x, g) < settings.tol) {
            result.converged = true;
            break;
        }

        if (exact) exact_model();
        VectorXd p;
        VectorXd mu;
        working.solve(hess, g, p, mu);

        // Release the constraint with the most negative multiplier when doing so
        // moves strictly into its interior.
        if (mu.size() > 0) {
            Eigen::Index k_min = 0;
            const double mu_min = mu.minCoeff(&k_min);
            if (mu_min < 0.0) {
                const auto k = static_cast<std::size_t>(k_min);
                const std::size_t j = working.members()[k];
                working.remove_at(k);
                VectorXd p_rel;
                VectorXd mu_rel;
                working.solve(hess, g, p_rel, mu_rel);
                if (rows[j].a.dot(p_rel) < 0.0 && g.dot(p_rel) < 0.0) {
                    p = std::move(p_rel);
                } else {
                    working.insert_at(k, j);
                }
            }
        }

        const double slope = g.dot(p);
        if (!(slope < 0.0) || p.lpNorm<Eigen::Infinity>() == 0.0) {
            if (!hess_is_fresh) {
                hess = MatrixXd::Identity(n, n);
                hess_is_fresh = true;
                continue;
            }
            break;
        }

        // Ratio test against constraints outside the working set.
        double alpha_max = kInf;
        std::size_t blocking = rows.size();
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (working.contains(j)) continue;
            const double ap = rows[j].a.dot(p);
            if (ap <= 0.0) continue;
            const double step = std::max(0.0, slack(rows[j], x)) / ap;
            if (step < alpha_max) {
                alpha_max = step;
                blocking = j;
            }
        }

        double alpha = std::min(1.0, alpha_max);
        const bool capped = alpha_max <= 1.0;
        VectorXd x_new;
        VectorXd g_new;
        double phi_new = phi;
        bool accepted = false;
        bool first_trial = true;
        bool hit_blocking = false;
        for (int bt = 0; bt < kMaxBacktracks && alpha > 0.0; ++bt) {
            x_new = region.project(x + alpha * p);
            const bool on_blocking = capped && first_trial && blocking < rows.size();
            if (on_blocking) {
                const auto& id = rows[blocking].id;
                if (id.kind == ConstraintKind::Lower) x_new[id.index] = region.lower[id.index];
                if (id.kind == ConstraintKind::Upper) x_new[id.index] = region.upper[id.index];
            }
            phi_new = eval(x_new, g_new);
            if (phi_new <= phi + settings.armijo_slope * alpha * slope) {
                accepted = true;
                hit_blocking = on_blocking;
                break;
            }
            alpha *= settings.contraction;
            first_trial = false;
        }

        if (!accepted) {
            if (!hess_is_fresh) {
                hess = MatrixXd::Identity(n, n);
                hess_is_fresh = true;
                continue;
            }
            // Predicted change below the rounding level of phi: no further progress is
            // representable, the current point is the numerical optimum.
            const double resolution = 64.0 * kEps * (1.0 + std::fabs(phi));
            if (std::fabs(slope) * std::min(1.0, alpha_max) <= resolution) {
                result.roundoff_limited = true;
            }
            break;
        }
        if (hit_blocking) working.add(blocking);

        const VectorXd s = x_new - x;
        const VectorXd y = g_new - g;
        const double resolution = 64.0 * kEps * (1.0 + std::fabs(phi));
        flat_steps = phi - phi_new <= resolution ? flat_steps + 1 : 0;
        x = std::move(x_new);
        g = std::move(g_new);
        phi = phi_new;
        result.value_history.push_back(-phi);

        // Constraints in the working set may have become slack through projection.
        for (std::size_t k = working.members().size(); k-- > 0;) {
            if (!is_tight(rows[working.members()[k]], x)) working.remove_at(k);
        }

        if (flat_steps >= kMaxFlatSteps) {
            result.roundoff_limited = true;
            ++iter;
            break;
        }
        if (exact) {
            evaluate_curvature();
            continue;
        }

        const double sy = s.dot(y);
        if (!scaled && sy > 0.0) {
            hess = MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
            scaled = true;
        }
        const VectorXd bs = hess * s;
        const double sbs = s.dot(bs);
        if (sbs > 0.0 && s.lpNorm<Eigen::Infinity>() > 0.0) {
            // Powell damping keeps the update positive definite.
            const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
            const VectorXd r = theta * y + (1.0 - theta) * bs;
            const double sr = s.dot(r);
            if (sr > 0.0) {
                hess += -(bs * bs.transpose()) / sbs + (r * r.transpose()) / sr;
                hess_is_fresh = false;
            }
        }
    }

    result.argmax = x;
    result.value = -phi;
    result.iterations = iter;
    result.projected_gradient_norm = projected_gradient(x, g);
    if (result.projected_gradient_norm < settings.tol) result.converged = true;
    if (result.roundoff_limited) result.converged = true;
    for (const auto& row : rows) {
        if (is_tight(row, x)) result.active.push_back(row.id);
    }
    return result;
}

OptimResult maximize_multistart(const Objective& objective, const FeasibleRegion& region,
                                std::span<const VectorXd> starts, const OptimSettings& settings,
                                const Curvature& curvature) {
    if (starts.empty()) throw DomainError("multistart needs at least one start point");
    OptimResult best;
    bool have = false;
    for (const auto& s : starts) {
        OptimResult r = maximize(objective, region, s, settings, curvature);
        if (!have) {
            best = std::move(r);
            have = true;
            continue;
        }
        const double gap = r.value - best.value;
        const bool tied = std::fabs(gap) < 1e-10;
        const bool lex_smaller = std::lexicographical_compare(
            r.argmax.data(), r.argmax.data() + r.argmax.size(), best.argmax.data(),
            best.argmax.data() + best.argmax.size());
        if ((!tied && gap > 0.0) || (tied && lex_smaller)) best = std::move(r);
    }
    return best;
}

}  // namespace setpar
