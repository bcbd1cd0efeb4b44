#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, index), so any sample can be regenerated in isolation and
// parallel workers need no shared state. The mixer is the SplitMix64
// finalizer; the increment is the 64-bit golden-ratio constant. Two chained
// mixes give full avalanche between the stream and index words.
namespace mrf::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t s = mix64(seed + kGolden * (stream + 1));
    return mix64(s + kGolden * (index + 1));
}

// Uniform in [0,1): top 53 bits scaled by 2^-53.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(at(seed, stream, index) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two counter-indexed uniforms.
// u1 in [0,1) makes 1-u1 in (0,1], so the log is finite.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    double u1 = uniform01(seed, stream, 2 * index);
    double u2 = uniform01(seed, stream, 2 * index + 1);
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

// Stream ids used across the library.
inline constexpr std::uint64_t kStreamFlip = 1;
inline constexpr std::uint64_t kStreamTr = 2;
inline constexpr std::uint64_t kStreamNoise = 3;

}  // namespace mrf::rng
