#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedprov {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream tags (round, client, purpose) into an
/// independent seed. splitmix64 finaliser.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mix_seed(base);
    for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags; keep stable, they are part of the determinism contract.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t select = 3;
inline constexpr std::uint64_t attack = 4;
inline constexpr std::uint64_t partition = 5;
inline constexpr std::uint64_t data = 6;
inline constexpr std::uint64_t malicious = 7;
inline constexpr std::uint64_t detect = 8;
inline constexpr std::uint64_t poison = 9;
}  // namespace stream

}  // namespace fedprov
