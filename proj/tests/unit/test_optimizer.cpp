#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "setpar/errors.hpp"
#include "setpar/optimizer.hpp"

using namespace setpar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

FeasibleRegion box(std::vector<double> lo, std::vector<double> hi) {
    FeasibleRegion r;
    r.lower = Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    r.upper = Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    return r;
}

Objective neg_sq_dist(const VectorXd& c) {
    return [c](const VectorXd& x, VectorXd& g) {
        g = -2.0 * (x - c);
        return -(x - c).squaredNorm();
    };
}

bool has_active(const OptimResult& r, ConstraintKind kind, int index) {
    return std::find(r.active.begin(), r.active.end(), ActiveConstraint{kind, index}) != r.active.end();
}

bool monotone(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[i - 1]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("interior quadratic maximum") {
    const auto region = box({0, 0, 0}, {5, 5, 5});
    VectorXd c(3);
    c << 1.5, 0.25, 3.0;
    const auto r = maximize(neg_sq_dist(c), region, VectorXd::Constant(3, 4.0));
    CHECK(r.converged);
    CHECK((r.argmax - c).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(r.active.empty());
    CHECK(monotone(r.value_history));
}

TEST_CASE("linear objective ends on its upper bound") {
    const auto region = box({0, 0}, {2, 3});
    const Objective f = [](const VectorXd& x, VectorXd& g) {
        g << 1.0, -0.25 * 2.0 * (x[1] - 1.0);
        return x[0] - 0.25 * (x[1] - 1.0) * (x[1] - 1.0);
    };
    VectorXd start(2);
    start << 0.1, 0.1;
    const auto r = maximize(f, region, start);
    CHECK(r.converged);
    CHECK(r.argmax[0] == 2.0);
    CHECK(r.argmax[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(has_active(r, ConstraintKind::Upper, 0));
    CHECK(r.active.size() == 1);
}

TEST_CASE("cap-constrained quadratic matches the hand-solved KKT point") {
    // max -(x - c)^2 s.t. x1 + x2 <= 0.999 with c = (0.8, 0.6):
    // x = c - t (1, 1), 1.4 - 2t = 0.999, t = 0.2005.
    FeasibleRegion region = box({0.001, 0.001}, {0.999, 0.999});
    region.caps.push_back({{0, 1}, 0.999});
    VectorXd c(2);
    c << 0.8, 0.6;
    VectorXd start(2);
    start << 0.1, 0.1;
    const auto r = maximize(neg_sq_dist(c), region, start);
    CHECK(r.converged);
    CHECK(r.argmax[0] == doctest::Approx(0.5995).epsilon(1e-9));
    CHECK(r.argmax[1] == doctest::Approx(0.3995).epsilon(1e-9));
    CHECK(has_active(r, ConstraintKind::Cap, 0));
    CHECK(r.argmax.sum() <= 0.999 + 1e-15);
}

TEST_CASE("constraints are released when the optimum moves inward") {
    const auto region = box({0, 0}, {1, 1});
    VectorXd c(2);
    c << 0.3, 0.7;
    VectorXd start(2);
    start << 1.0, 0.0;  // both bounds tight at the start
    const auto r = maximize(neg_sq_dist(c), region, start);
    CHECK(r.converged);
    CHECK((r.argmax - c).norm() < 1e-8);
    CHECK(r.active.empty());
}

TEST_CASE("Rosenbrock valley with a box that cuts off the optimum") {
    const auto region = box({-2, -2}, {0.8, 2});
    const Objective f = [](const VectorXd& x, VectorXd& g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g << 2.0 * a + 400.0 * x[0] * b, -200.0 * b;
        return -(a * a + 100.0 * b * b);
    };
    VectorXd start(2);
    start << -1.2, 1.0;
    OptimSettings s;
    s.max_iter = 2000;
    const auto r = maximize(f, region, start, s);
    CHECK(r.converged);
    CHECK(r.argmax[0] == 0.8);
    CHECK(r.argmax[1] == doctest::Approx(0.64).epsilon(1e-6));
    CHECK(monotone(r.value_history));
}

TEST_CASE("exact curvature reaches the same point in fewer iterations") {
    FeasibleRegion region = box({0.001, 0.001, 0.001}, {10, 0.999, 0.999});
    region.caps.push_back({{1, 2}, 0.999});
    MatrixXd q(3, 3);
    q << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
    VectorXd c(3);
    c << 2.0, 0.9, 0.5;
    const Objective f = [&](const VectorXd& x, VectorXd& g) {
        g = -q * (x - c);
        return -0.5 * (x - c).dot(q * (x - c));
    };
    const Curvature h = [&](const VectorXd&, MatrixXd& out) { out = -q; };
    const VectorXd start = VectorXd::Constant(3, 0.2);
    const auto bfgs = maximize(f, region, start);
    const auto newton = maximize(f, region, start, {}, h);
    CHECK(bfgs.converged);
    CHECK(newton.converged);
    CHECK((bfgs.argmax - newton.argmax).lpNorm<Eigen::Infinity>() < 1e-7);
    CHECK(newton.iterations <= bfgs.iterations);
    CHECK(has_active(newton, ConstraintKind::Cap, 0));
}

TEST_CASE("errors") {
    const auto region = box({0, 0}, {1, 1});
    VectorXd outside(2);
    outside << 1.5, 0.5;
    CHECK_THROWS_AS(maximize(neg_sq_dist(VectorXd::Zero(2)), region, outside), DomainError);

    const Objective nan_far = [](const VectorXd& x, VectorXd& g) {
        g = VectorXd::Ones(2);
        return x[0] > 0.6 ? NAN : x.sum();
    };
    VectorXd start(2);
    start << 0.5, 0.5;
    try {
        maximize(nan_far, region, start);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        REQUIRE(e.point().size() == 2);
        CHECK(e.point()[0] > 0.6);
    }
}

TEST_CASE("feasible region factories and projection") {
    const auto s = FeasibleRegion::setpar();
    CHECK(s.dimension() == 6);
    CHECK_NOTHROW(s.validate());
    VectorXd x(6);
    x << -1, 2, 0.5, 3, 0.9, 0.9;
    const VectorXd p = s.project(x);
    CHECK(s.contains(p, 1e-12));
    CHECK(p[0] == 1e-3);
    CHECK(p[1] == 1.0 - 1e-3);
    CHECK(p[4] + p[5] == doctest::Approx(1.0 - 1e-3).epsilon(1e-12));
    // Projection onto the cap shifts both coordinates equally.
    CHECK(p[4] == doctest::Approx(p[5]));

    CHECK(FeasibleRegion::par().dimension() == 3);
    CHECK(FeasibleRegion::setpar_b2_zero().dimension() == 5);

    FeasibleRegion empty = box({0.6, 0.6}, {1, 1});
    empty.caps.push_back({{0, 1}, 1.0});
    CHECK_THROWS_AS(empty.validate(), DomainError);
}

TEST_CASE("multistart prefers the better value and breaks ties lexicographically") {
    // Two symmetric maxima at x = -1 and x = +1.
    const auto region = box({-2}, {2});
    const Objective f = [](const VectorXd& x, VectorXd& g) {
        const double v = x[0] * x[0] - 1.0;
        g << -4.0 * x[0] * v;
        return -v * v;
    };
    std::vector<VectorXd> starts{VectorXd::Constant(1, 1.7), VectorXd::Constant(1, -1.7)};
    const auto r = maximize_multistart(f, region, starts);
    CHECK(r.argmax[0] == doctest::Approx(-1.0).epsilon(1e-6));

    const auto again = maximize_multistart(f, region, starts);
    CHECK(again.argmax == r.argmax);
    CHECK(again.iterations == r.iterations);
}
