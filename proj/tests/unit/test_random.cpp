#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "setpar/errors.hpp"
#include "setpar/random.hpp"

using namespace setpar;

namespace {

// Pearson chi-square p-value of `samples` against Poisson(mean), cells pooled so every
// expected count is at least 5.
double poisson_gof_pvalue(const std::vector<Count>& samples, double mean) {
    const boost::math::poisson_distribution<double> law(mean);
    const double n = static_cast<double>(samples.size());
    Count hi = 0;
    for (const Count s : samples) hi = std::max(hi, s);

    std::vector<double> expected;
    std::vector<double> observed;
    std::vector<double> counts(static_cast<std::size_t>(hi) + 1, 0.0);
    for (const Count s : samples) counts[static_cast<std::size_t>(s)] += 1.0;

    double e_acc = 0.0;
    double o_acc = 0.0;
    double cdf_prev = 0.0;
    for (Count k = 0; k <= hi; ++k) {
        const double cdf = boost::math::cdf(law, static_cast<double>(k));
        e_acc += n * (cdf - cdf_prev);
        o_acc += counts[static_cast<std::size_t>(k)];
        cdf_prev = cdf;
        if (e_acc >= 5.0 && n * (1.0 - cdf) >= 5.0) {
            expected.push_back(e_acc);
            observed.push_back(o_acc);
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    // Upper tail, merged with whatever is left over.
    e_acc += n * (1.0 - cdf_prev);
    if (!expected.empty() && e_acc < 5.0) {
        expected.back() += e_acc;
        observed.back() += o_acc;
    } else {
        expected.push_back(e_acc);
        observed.push_back(o_acc);
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(expected.size() - 1));
    return boost::math::cdf(boost::math::complement(chi, stat));
}

}  // namespace

TEST_CASE("streams are reproducible and distinct") {
    RandomStream a(42);
    RandomStream b(42);
    RandomStream c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs = differs || x != c();
    }
    CHECK(differs);
}

TEST_CASE("derived seeds differ across keys and key order") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t n : {500u, 1000u}) {
        for (std::uint64_t i = 0; i < 500; ++i) seen.insert(derive_seed(7, {99, n, i}));
    }
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("uniform draws stay in the open unit interval with the right mean") {
    RandomStream rng(5);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("Poisson sampler edge cases") {
    RandomStream rng(1);
    CHECK(sample_poisson(rng, 0.0) == 0);
    CHECK_THROWS_AS(sample_poisson(rng, -1.0), DomainError);
    CHECK_THROWS_AS(sample_poisson(rng, NAN), DomainError);
    CHECK_THROWS_AS(sample_poisson(rng, INFINITY), DomainError);
}

TEST_CASE("Poisson sampler passes chi-square goodness of fit on both branches") {
    for (const double mean : {0.3, 2.0, 12.5, 29.9, 30.0, 75.0, 600.0}) {
        CAPTURE(mean);
        int passed = 0;
        const int runs = 40;
        for (int run = 0; run < runs; ++run) {
            RandomStream rng(derive_seed(2024, {static_cast<std::uint64_t>(mean * 10), static_cast<std::uint64_t>(run)}));
            std::vector<Count> draws(4000);
            for (auto& d : draws) d = sample_poisson(rng, mean);
            if (poisson_gof_pvalue(draws, mean) > 0.01) ++passed;
        }
        CHECK(passed >= 38);  // 95% of runs at the 1% level
    }
}

TEST_CASE("sample moments of large-mean draws") {
    RandomStream rng(77);
    const double mean = 250.0;
    const int n = 100000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto y = static_cast<double>(sample_poisson(rng, mean));
        s += y;
        s2 += y * y;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK(std::fabs(m - mean) < 4.0 * std::sqrt(mean / n));
    CHECK(std::fabs(v / mean - 1.0) < 0.03);
}
