#pragma once

#include <cstdint>
#include <random>

namespace pfo {

/// mt19937_64's output sequence is fixed by the standard, so streams are identical across platforms.
using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent engine for item `index` of a run seeded with `seed`.
inline Engine substream(std::uint64_t seed, std::uint64_t index) {
    return Engine{splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

/// Uniform on the open interval (0, 1) from the top 53 bits; avoids the
/// implementation-defined std::uniform_real_distribution.
inline double uniform_open01(Engine& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform on [lo, hi).
inline double uniform(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(g() >> 11) * 0x1.0p-53);
}

/// Uniform integer in [0, n) by rejection, platform-independent.
inline std::uint64_t uniform_index(Engine& g, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

}  // namespace pfo
