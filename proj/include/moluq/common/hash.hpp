#pragma once

#include <cstdint>
#include <string_view>

namespace moluq {

// Stable 64-bit hashing used for fingerprints, scaffold keys, and seed
// derivation. Outputs are part of the on-disk contract: they must not change
// across platforms or releases, so only the algorithms below may be used
// (never std::hash).

// FNV-1a over a byte sequence.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; also usable as a seed stream.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Seed for a named sub-stream (per estimator cell, per ensemble member, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    return mix64(fnv1a64(tag) ^ mix64(master));
}

}  // namespace moluq
