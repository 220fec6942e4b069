#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace frmpair {

using Engine = std::mt19937_64;

/// Identifies one deterministic random stream: a user seed plus a stream id.
/// Substreams are derived by hashing the whole path through std::seed_seq,
/// so results never depend on how work is split across threads.
struct RngKey {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    [[nodiscard]] RngKey substream(std::uint64_t id) const noexcept {
        // splitmix64 finalizer keeps nested ids from colliding with flat ones
        std::uint64_t z = stream + 0x9e3779b97f4a7c15ULL * (id + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return {seed, z ^ (z >> 31)};
    }

    [[nodiscard]] Engine engine() const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        return Engine(seq);
    }
};

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; implemented here so sample sequences do not
/// depend on the standard library's distribution internals.
inline double standard_normal(Engine& rng) noexcept {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace frmpair
