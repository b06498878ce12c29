#pragma once

#include <cstdint>
#include <random>

namespace nearsim {

// std::mt19937_64 output is pinned by the standard, but the stdlib
// *distributions* are not. Everything that feeds results goes through these
// helpers so that a given seed yields the same stream on any toolchain.

// Uniform in [0, n) by masked rejection.
inline std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~0ull;
    const std::uint64_t m = n - 1;
    // smallest all-ones mask covering n-1
    mask = m;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t x = rng() & mask;
        if (x < n) return x;
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double rng_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace nearsim
