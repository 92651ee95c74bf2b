#include "setpar/random.hpp"

#include <cmath>

#include "setpar/errors.hpp"

namespace setpar {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

// Below this mean the sequential search is both exact and cheap.
constexpr double kInversionCutoff = 30.0;

Count poisson_inversion(RandomStream& rng, double mean) {
    const double u = rng.uniform();
    Count k = 0;
    double p = std::exp(-mean);
    double cdf = p;
    while (u > cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        if (p == 0.0) break;  // cdf saturated below u through rounding
        cdf += p;
    }
    return k;
}

Count poisson_ptrs(RandomStream& rng, double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<Count>(kd);
        if (kd < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
        const double rhs = -mean + kd * loglam - std::lgamma(kd + 1.0);
        if (lhs <= rhs) return static_cast<Count>(kd);
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(base ^ 0x6A09E667F3BCC909ULL);
    for (const auto k : keys) h = mix64(h + 0x9E3779B97F4A7C15ULL + mix64(k));
    return h;
}

RandomStream::RandomStream(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& word : s_) {
        z += 0x9E3779B97F4A7C15ULL;
        word = mix64(z);
    }
}

RandomStream::result_type RandomStream::operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomStream::uniform() noexcept {
    // (k + 0.5) / 2^53 never hits 0 or 1.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

Count sample_poisson(RandomStream& rng, double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw DomainError("Poisson mean must be finite and nonnegative");
    }
    if (mean == 0.0) return 0;
    return mean < kInversionCutoff ? poisson_inversion(rng, mean) : poisson_ptrs(rng, mean);
}

}  // namespace setpar
