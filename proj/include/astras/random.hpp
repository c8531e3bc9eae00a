#ifndef ASTRAS_RANDOM_HPP
#define ASTRAS_RANDOM_HPP

#include <cstdint>
#include <random>

namespace astras {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent engine for item `index` of a run seeded with `seed`, so that
/// per-item work gives the same numbers regardless of processing order.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index)
{
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851F42D4C957F2DULL)));
}

} // namespace astras

#endif // ASTRAS_RANDOM_HPP
