#ifndef RISKPOOL_RNG_HPP
#define RISKPOOL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace riskpool::rng {

/// Identifier recorded in output metadata so results can be tied to the
/// exact generation scheme.
inline constexpr std::string_view generator_id = "splitmix64-boxmuller";

/// Counter-based splitmix64: the value at position `index` of the stream
/// keyed by `seed`. Random access makes chunked Monte-Carlo loops
/// independent of how the work is split across threads.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01_at(std::uint64_t seed, std::uint64_t index) noexcept {
    return static_cast<double>(splitmix64_at(seed, index) >> 11) * 0x1.0p-53;
}

/// Standard normal draw via Box-Muller; consumes counters 2*index and
/// 2*index + 1. The first uniform is shifted into (0, 1] so the log is finite.
inline double normal_at(std::uint64_t seed, std::uint64_t index) noexcept {
    const double u1 =
        (static_cast<double>(splitmix64_at(seed, 2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01_at(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// FNV-1a, used to derive reproducible sampling seeds from canonical keys.
inline std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace riskpool::rng

#endif // RISKPOOL_RNG_HPP
