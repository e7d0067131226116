#pragma once

#include <cstdint>
#include <random>

namespace circforest {

// Portable uniform draws on top of mt19937_64. std::uniform_*_distribution is
// implementation-defined, which would break bit-identical reproducibility
// across standard libraries.

/// Uniform double in [0, 1), 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), unbiased (rejection on the top slice).
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// splitmix64 finalizer; decorrelates seeds derived from small offsets.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-stream seed (e.g. one stream per tree of a forest).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 1));
}

}  // namespace circforest
