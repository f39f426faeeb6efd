#pragma once

// Platform-stable random helpers. std::mt19937_64 output is fixed by the
// standard but the std distributions are not, so bounded draws are derived
// here directly from the engine output.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace qaval {

// 64-bit FNV-1a.
constexpr std::uint64_t stable_hash(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) {
    std::uint64_t h = basis;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer, used to mix a base seed with a stream key.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 derived_rng(std::uint64_t seed, std::string_view stream_key) {
    return std::mt19937_64(mix_seed(seed, stable_hash(stream_key)));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Moves a uniformly chosen subset of size `count` to the front of `items`
// (partial Fisher-Yates); the order of the chosen prefix is the draw order.
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t count, std::mt19937_64& rng) {
    if (count > items.size()) count = items.size();
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, items.size() - i));
        std::swap(items[i], items[j]);
    }
}

}  // namespace qaval
