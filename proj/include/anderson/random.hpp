#pragma once

#include <cstdint>
#include <random>

namespace anderson {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

/// Independent generator for stream `index` of a seeded ensemble.
///
/// Stream i depends only on (seed ^ i), never on how many streams were
/// drawn before it, so trials can run in any order or on any thread.
inline Engine make_stream(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = seed ^ index;
    const std::uint64_t a = splitmix64(key);
    const std::uint64_t b = splitmix64(a);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Engine(seq);
}

/// Seed recorded for trial `index` of an ensemble seeded with `seed`.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return seed ^ index;
}

}  // namespace anderson
