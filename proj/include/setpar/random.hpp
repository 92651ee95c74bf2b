#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "setpar/model.hpp"

namespace setpar {

/// SplitMix64 finalizer; also used to derive stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for an independent stream identified by a base seed plus a key path,
/// e.g. derive_seed(base, {design_hash, n, replication}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Poisson variate: sequential-search inversion below mean 30,
/// Hormann's transformed rejection (PTRS) at and above.
Count sample_poisson(RandomStream& rng, double mean);

}  // namespace setpar
