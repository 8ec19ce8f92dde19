#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace moluq::chem {

enum class BondOrder : std::uint8_t {
    Single = 1,
    Double = 2,
    Triple = 3,
    Aromatic = 4,
};

// Twice the conventional bond order; aromatic counts as 1.5.
inline int doubled_order(BondOrder o) {
    switch (o) {
        case BondOrder::Single: return 2;
        case BondOrder::Double: return 4;
        case BondOrder::Triple: return 6;
        case BondOrder::Aromatic: return 3;
    }
    return 2;
}

struct Atom {
    std::string element;     // element symbol, e.g. "C", "Cl"
    int formal_charge = 0;
    bool aromatic = false;
    int hydrogens = 0;       // attached hydrogens (implicit + bracket-explicit)
};

struct Bond {
    int a = 0;  // atom indices, a < b after normalization
    int b = 0;
    BondOrder order = BondOrder::Single;
};

// Heavy-atom graph parsed from a SMILES string. Immutable in practice: all
// chem operations take it by const reference and share no state.
struct Molecule {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;
    std::vector<std::vector<int>> rings;  // one sorted atom-index set per ring

    std::vector<int> neighbors(int atom) const {
        std::vector<int> out;
        for (const Bond& bd : bonds) {
            if (bd.a == atom) out.push_back(bd.b);
            if (bd.b == atom) out.push_back(bd.a);
        }
        return out;
    }

    int degree(int atom) const {
        int d = 0;
        for (const Bond& bd : bonds) d += (bd.a == atom || bd.b == atom);
        return d;
    }

    bool in_ring(int atom) const {
        for (const auto& ring : rings) {
            for (int i : ring) {
                if (i == atom) return true;
            }
        }
        return false;
    }
};

}  // namespace moluq::chem
