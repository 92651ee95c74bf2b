#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "designs.hpp"
#include "setpar/errors.hpp"
#include "setpar/mc_study.hpp"
#include "setpar/model.hpp"

using namespace setpar;
using setpar::testing::r7_truth;
using setpar::testing::r6_truth;

TEST_CASE("intensity_step hand evaluations") {
    const auto p = r6_truth();
    CHECK(intensity_step(2.0, 3, p) == doctest::Approx(4.2).epsilon(1e-15));
    CHECK(intensity_step(2.0, 7, p) == doctest::Approx(1.3).epsilon(1e-15));
    // y = r stays in the lower regime, r + 1 switches.
    CHECK(intensity_step(2.0, 6, p) == doctest::Approx(0.5 + 1.6 + 4.2));
    CHECK(intensity_step(2.0, 5, p) == doctest::Approx(0.5 + 1.6 + 3.5));
    CHECK_THROWS_AS(intensity_step(0.0, 1, p), DomainError);
    CHECK_THROWS_AS(intensity_step(-1.0, 1, p), DomainError);
}

TEST_CASE("zero counts drive the intensity to d1 / (1 - a1)") {
    SetparParams p{3, {0.5, 0.7, 0.4}, {1.0, 0.1, 0.1}};
    double lam = 40.0;
    for (int i = 0; i < 200; ++i) lam = intensity_step(lam, 0, p);
    CHECK(lam == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(p.reachable_state() == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((RegimeParams{0.0, 0.5, 0.5}).validate(), DomainError);
    CHECK_THROWS_AS((RegimeParams{1.0, -0.1, 0.5}).validate(), DomainError);
    CHECK_THROWS_AS((RegimeParams{1.0, 0.5, NAN}).validate(), DomainError);
    CHECK_NOTHROW((RegimeParams{1.0, 0.0, 0.0}).validate());
    SetparParams bad = r6_truth();
    bad.r = -1;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK(r7_truth().is_stable());
    CHECK(r6_truth().is_stable());
    CHECK_FALSE((SetparParams{2, {1, 1.2, 0.1}, {1, 0.5, 0.2}}).is_stable());

    const ParamVector v = r7_truth().to_vector();
    CHECK(SetparParams::from_vector(7, v) == r7_truth());
}

TEST_CASE("count series invariants") {
    CHECK_THROWS_AS(CountSeries({1, -2, 3}), DomainError);
    const CountSeries s({4, 0, 2, 6});
    CHECK(s.mean() == doctest::Approx(3.0));
    CHECK(s.max() == 6);
    CHECK(s.slice(1, 2) == CountSeries({0, 2}));
    CHECK_THROWS_AS(s.slice(3, 2), DomainError);
    CHECK_THROWS_AS(CountSeries().mean(), DomainError);
}

TEST_CASE("multi-regime bins follow half-open intervals") {
    MultiRegimeParams m{{3, 7}, {{1.0, 0.1, 0.1}, {2.0, 0.2, 0.2}, {3.0, 0.3, 0.3}}};
    CHECK_NOTHROW(m.validate());
    // Hand-written bin lookup: [0, 3) -> 0, [3, 7) -> 1, [7, inf) -> 2.
    auto expected = [](Count y) -> std::size_t { return y < 3 ? 0 : (y < 7 ? 1 : 2); };
    for (Count y = 0; y <= 9; ++y) {
        CHECK(m.regime_index(y) == expected(y));
        const auto& reg = m.regimes[expected(y)];
        CHECK(intensity_step_multi(2.0, y, m) == doctest::Approx(reg.d + reg.a * 2.0 + reg.b * y));
    }

    MultiRegimeParams single{{}, {{0.7, 0.3, 0.4}}};
    CHECK(intensity_step_multi(5.0, 11, single) == doctest::Approx(0.7 + 1.5 + 4.4));

    // Two regimes with the boundary shifted by one reproduce the two-regime model.
    const auto p = r6_truth();
    MultiRegimeParams two{{p.r + 1}, {p.lower, p.upper}};
    for (Count y = 0; y < 20; ++y) {
        CHECK(intensity_step_multi(3.3, y, two) == intensity_step(3.3, y, p));
    }

    CHECK_THROWS_AS((MultiRegimeParams{{5, 5}, {{1, 0, 0}, {1, 0, 0}, {1, 0, 0}}}).validate(), DomainError);
    CHECK_THROWS_AS((MultiRegimeParams{{5}, {{1, 0, 0}}}).validate(), DomainError);
    CHECK_THROWS_AS((MultiRegimeParams{{0}, {{1, 0, 0}, {1, 0, 0}}}).validate(), DomainError);
}

TEST_CASE("intensity_path against a hand-unrolled recursion") {
    const auto p = r6_truth();
    const CountSeries s({3, 8, 0, 6});
    const auto path = intensity_path(s, p, 2.0);
    const double l1 = 2.0;
    const double l2 = 0.5 + 0.8 * l1 + 0.7 * 3;
    const double l3 = 0.2 + 0.2 * l2 + 0.1 * 8;
    const double l4 = 0.5 + 0.8 * l3 + 0.7 * 0;
    REQUIRE(path.values.size() == 4);
    CHECK(path.values[0] == l1);
    CHECK(path.values[1] == doctest::Approx(l2).epsilon(1e-15));
    CHECK(path.values[2] == doctest::Approx(l3).epsilon(1e-15));
    CHECK(path.values[3] == doctest::Approx(l4).epsilon(1e-15));
    CHECK(path.initial_value == 2.0);
    CHECK_THROWS_AS(intensity_path(CountSeries(), p, 1.0), DomainError);
    CHECK_THROWS_AS(intensity_path(s, p, 0.0), DomainError);
}

TEST_CASE("constant zero series at the fixed point gives a constant path") {
    SetparParams p{2, {0.5, 0.7, 0.3}, {0.4, 0.2, 0.2}};
    const CountSeries zeros(std::vector<Count>(50, 0));
    const auto path = intensity_path(zeros, p, p.reachable_state());
    for (const double v : path.values) CHECK(v == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("paths from different starts contract by the product of a coefficients") {
    const auto p = r7_truth();
    const auto sim = simulate(p, 300, 17);
    const auto u = intensity_path(sim.series, p, 1.0);
    const auto v = intensity_path(sim.series, p, 10.0);
    double prod = 1.0;
    const double a_max = std::max(p.lower.a, p.upper.a);
    double lam_max = 0.0;
    for (std::size_t t = 0; t < sim.series.size(); ++t) {
        lam_max = std::max({lam_max, u.values[t], v.values[t]});
        // Each step rounds at the scale of lambda; the contraction keeps the sum bounded.
        const double slack = 4.0 * std::numeric_limits<double>::epsilon() * lam_max * static_cast<double>(t + 1);
        const double diff = std::fabs(u.values[t] - v.values[t]);
        CHECK(std::fabs(diff - prod * 9.0) <= 1e-12 * prod * 9.0 + slack);
        CHECK(diff <= std::pow(a_max, static_cast<double>(t)) * 9.0 * (1 + 1e-12) + slack);
        prod *= p.regime_for(sim.series[t]).a;
    }
}

TEST_CASE("intensity stays above the smaller intercept") {
    const auto p = r6_truth();
    const auto sim = simulate(p, 2000, 5);
    for (std::size_t t = 1; t < sim.series.size(); ++t) {
        CHECK(sim.intensity.values[t] >= std::min(p.lower.d, p.upper.d));
    }
}

TEST_CASE("simulation is reproducible from the seed") {
    const auto p = r6_truth();
    const auto a = simulate(p, 500, 1);
    const auto b = simulate(p, 500, 1);
    const auto c = simulate(p, 500, 2);
    CHECK(a.series == b.series);
    CHECK(a.intensity.values == b.intensity.values);
    CHECK_FALSE(a.series == c.series);
    CHECK(a.series.size() == 500);
    CHECK_THROWS_AS(simulate(p, 0, 1), DomainError);
}

TEST_CASE("simulated intensity matches the recursion on the simulated counts") {
    const auto p = r7_truth();
    SimulationOptions opt;
    opt.burn_in = 0;
    opt.lambda_init = 2.5;
    const auto sim = simulate(p, 400, 99, opt);
    const auto path = intensity_path(sim.series, p, 2.5);
    CHECK(sim.intensity.values == path.values);
}

TEST_CASE("long-run mean agrees with an independent simulator") {
    // Oracle: standard library engine and Poisson sampler, 10^7 steps.
    const auto p = r7_truth();
    std::mt19937_64 eng(20240601);
    double lam = p.reachable_state();
    double sum = 0.0;
    const std::size_t oracle_n = 10'000'000;
    for (std::size_t t = 0; t < 1000 + oracle_n; ++t) {
        std::poisson_distribution<long long> pois(lam);
        const long long y = pois(eng);
        if (t >= 1000) sum += static_cast<double>(y);
        lam = intensity_step(lam, y, p);
    }
    const double oracle_mean = sum / static_cast<double>(oracle_n);

    const auto sim = simulate(p, 100'000, 4242);
    std::vector<double> y(sim.series.begin(), sim.series.end());
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    const double se = batch_means_se(y, 50);
    CHECK(std::fabs(mean - oracle_mean) < 3.0 * se);
}

TEST_CASE("six-threshold design produces negative lag-one dependence in most paths") {
    const auto p = r6_truth();
    int negative = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto sim = simulate(p, 500, seed);
        const double m = sim.series.mean();
        double c0 = 0.0;
        double c1 = 0.0;
        for (std::size_t t = 0; t < 500; ++t) {
            const double d = static_cast<double>(sim.series[t]) - m;
            c0 += d * d;
            if (t + 1 < 500) c1 += d * (static_cast<double>(sim.series[t + 1]) - m);
        }
        if (c1 / c0 < 0.0) ++negative;
    }
    CHECK(negative >= 80);
}
