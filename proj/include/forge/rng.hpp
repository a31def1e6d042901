#pragma once

// Seed derivation and portable sampling primitives.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not, so bounded integers and unit reals are drawn here to
// keep every output byte-identical across standard library implementations.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace forge::rng {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Independent substream for (seed, stream label, item index).
inline constexpr std::uint64_t derive(std::uint64_t seed, std::string_view stream,
                                      std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(seed ^ fnv1a(stream)) + index);
}

inline Engine make_engine(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Engine(derive(seed, stream, index));
}

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_below(Engine &eng, std::uint64_t bound) {
    const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
    std::uint64_t x = eng();
    while (x >= limit) x = eng();
    return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine &eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle(std::vector<T> &v, Engine &eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct values from [0, n), returned sorted. Floyd's algorithm.
inline std::vector<std::uint64_t> sample_sorted(Engine &eng, std::uint64_t n, std::uint64_t k) {
    std::vector<std::uint64_t> picked;
    picked.reserve(k);
    for (std::uint64_t j = n - k; j < n; ++j) {
        const std::uint64_t t = uniform_below(eng, j + 1);
        bool seen = false;
        for (auto p : picked) {
            if (p == t) {
                seen = true;
                break;
            }
        }
        picked.push_back(seen ? j : t);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

} // namespace forge::rng
