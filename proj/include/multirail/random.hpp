// random.hpp: small deterministic generator for Monte Carlo sampling.
//
// SplitMix64 is used instead of std::mt19937_64 because its output for a
// given seed is pinned by a published reference implementation, so sampled
// trajectories are reproducible across standard libraries and platforms.

#pragma once

#include <cstdint>

namespace multirail {

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Derives an independent stream seed so that parallel blocks of samples can
// each own a generator without sharing state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    SplitMix64 g(base ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
    g.next();
    return g.next();
}

}  // namespace multirail
