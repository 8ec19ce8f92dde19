#include "moluq/chem/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"

namespace moluq::chem {

int Fingerprint::popcount() const {
    int n = 0;
    for (std::uint64_t w : words) n += std::popcount(w);
    return n;
}

std::vector<int> Fingerprint::set_bits() const {
    std::vector<int> out;
    for (int i = 0; i < length; ++i) {
        if (test(i)) out.push_back(i);
    }
    return out;
}

namespace {

std::uint64_t hash_u64s(std::initializer_list<std::uint64_t> vals) {
    std::uint64_t h = 0x9ae16a3b2f90404fULL;
    for (std::uint64_t v : vals) h = hash_combine(h, v);
    return h;
}

// Radius-0 invariant: element, charge, aromaticity, degree, H count.
std::uint64_t atom_invariant(const Molecule& m, int atom) {
    const Atom& a = m.atoms[atom];
    return hash_u64s({fnv1a64(a.element),
                      static_cast<std::uint64_t>(a.formal_charge + 8),
                      static_cast<std::uint64_t>(a.aromatic ? 1 : 0),
                      static_cast<std::uint64_t>(m.degree(atom)),
                      static_cast<std::uint64_t>(a.hydrogens)});
}

}  // namespace

Fingerprint circular_fingerprint(const Molecule& m, int length, int radius) {
    if (length < 8) throw Error("fingerprint length must be >= 8");
    if (radius < 0) throw Error("fingerprint radius must be >= 0");

    Fingerprint fp;
    fp.length = length;
    fp.radius = radius;
    fp.words.assign((static_cast<std::size_t>(length) + 63) / 64, 0);

    const int n = static_cast<int>(m.atoms.size());
    std::vector<std::vector<std::pair<int, int>>> nbrs(n);  // (neighbor, doubled order)
    for (const Bond& b : m.bonds) {
        nbrs[b.a].push_back({b.b, doubled_order(b.order)});
        nbrs[b.b].push_back({b.a, doubled_order(b.order)});
    }

    std::vector<std::uint64_t> inv(n);
    for (int i = 0; i < n; ++i) {
        inv[i] = atom_invariant(m, i);
        fp.set(static_cast<int>(inv[i] % static_cast<std::uint64_t>(length)));
    }

    std::vector<std::uint64_t> next(n);
    for (int r = 1; r <= radius; ++r) {
        for (int i = 0; i < n; ++i) {
            // Sorted (bond order, neighbor invariant) pairs make the update
            // independent of atom numbering.
            std::vector<std::pair<int, std::uint64_t>> env;
            env.reserve(nbrs[i].size());
            for (auto [j, order] : nbrs[i]) env.push_back({order, inv[j]});
            std::sort(env.begin(), env.end());
            std::uint64_t h = hash_u64s({static_cast<std::uint64_t>(r), inv[i]});
            for (auto [order, v] : env) {
                h = hash_combine(h, static_cast<std::uint64_t>(order));
                h = hash_combine(h, v);
            }
            next[i] = h;
            fp.set(static_cast<int>(h % static_cast<std::uint64_t>(length)));
        }
        std::swap(inv, next);
    }
    return fp;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
    if (a.length != b.length) {
        throw Error("tanimoto_distance: fingerprint lengths differ (" +
                    std::to_string(a.length) + " vs " + std::to_string(b.length) + ")");
    }
    int inter = 0;
    int uni = 0;
    for (std::size_t i = 0; i < a.words.size(); ++i) {
        inter += std::popcount(a.words[i] & b.words[i]);
        uni += std::popcount(a.words[i] | b.words[i]);
    }
    if (uni == 0) return 0.0;  // two empty fingerprints are identical
    if (inter == 0) return std::numeric_limits<double>::infinity();
    return -std::log2(static_cast<double>(inter) / static_cast<double>(uni));
}

}  // namespace moluq::chem
