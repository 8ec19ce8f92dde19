#pragma once

#include <cstdint>
#include <vector>

#include "moluq/chem/molecule.hpp"

namespace moluq::chem {

// Binary circular fingerprint. Bit assignment is part of the on-disk
// contract: the environment hash is FNV-1a/splitmix based (common/hash.hpp)
// and stable across platforms.
struct Fingerprint {
    std::vector<std::uint64_t> words;
    int length = 0;
    int radius = 0;

    bool test(int bit) const {
        return (words[static_cast<std::size_t>(bit) >> 6] >> (bit & 63)) & 1ULL;
    }
    void set(int bit) {
        words[static_cast<std::size_t>(bit) >> 6] |= 1ULL << (bit & 63);
    }
    int popcount() const;
    std::vector<int> set_bits() const;

    bool operator==(const Fingerprint& other) const = default;
};

// Hashes a canonical invariant of each atom's r-neighborhood, r = 0..radius,
// into bit (hash mod length). length >= 8, radius >= 0.
Fingerprint circular_fingerprint(const Molecule& m, int length = 2048, int radius = 3);

// -log2(|a & b| / |a | b|). Returns +infinity when the intersection is
// empty but the union is not; two all-zero fingerprints count as identical
// (distance 0). Throws on length mismatch.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

}  // namespace moluq::chem
