#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "moluq/chem/scaffold.hpp"
#include "moluq/chem/smiles.hpp"

using moluq::chem::BondOrder;
using moluq::chem::Molecule;
using moluq::chem::ParseError;
using moluq::chem::ParseErrorKind;
using moluq::chem::parse_smiles;
using moluq::chem::write_smiles;

namespace {

int count_order(const Molecule& m, BondOrder o) {
    int n = 0;
    for (const auto& b : m.bonds) n += (b.order == o);
    return n;
}

ParseErrorKind kind_of(const std::string& smiles) {
    try {
        parse_smiles(smiles);
    } catch (const ParseError& e) {
        return e.kind();
    }
    FAIL("expected parse error for ", smiles);
    return ParseErrorKind::Syntax;
}

}  // namespace

TEST_CASE("single atom") {
    const Molecule m = parse_smiles("C");
    CHECK(m.atoms.size() == 1);
    CHECK(m.bonds.empty());
    CHECK(m.atoms[0].element == "C");
    CHECK(m.atoms[0].hydrogens == 4);
    CHECK(m.rings.empty());
}

TEST_CASE("benzene: aromatic ring") {
    // Hand-traced: six lowercase atoms, five chain bonds plus the ring
    // closure, all aromatic because both endpoints are aromatic.
    const Molecule m = parse_smiles("c1ccccc1");
    CHECK(m.atoms.size() == 6);
    CHECK(m.bonds.size() == 6);
    CHECK(count_order(m, BondOrder::Aromatic) == 6);
    for (const auto& a : m.atoms) {
        CHECK(a.aromatic);
        CHECK(a.hydrogens == 1);
    }
    REQUIRE(m.rings.size() == 1);
    CHECK(m.rings[0].size() == 6);
}

TEST_CASE("acetic acid: branch and double bond") {
    // Hand-traced: C-C(=O)O gives 4 atoms and 3 bonds, one of them double.
    const Molecule m = parse_smiles("CC(=O)O");
    CHECK(m.atoms.size() == 4);
    CHECK(m.bonds.size() == 3);
    CHECK(count_order(m, BondOrder::Double) == 1);
    CHECK(count_order(m, BondOrder::Single) == 2);
    CHECK(m.atoms[0].hydrogens == 3);   // methyl
    CHECK(m.atoms[2].hydrogens == 0);   // carbonyl oxygen
    CHECK(m.atoms[3].hydrogens == 1);   // hydroxyl oxygen
}

TEST_CASE("bracket atoms: charge and explicit hydrogens") {
    const Molecule m = parse_smiles("[NH4+]");
    CHECK(m.atoms[0].element == "N");
    CHECK(m.atoms[0].hydrogens == 4);
    CHECK(m.atoms[0].formal_charge == 1);

    const Molecule anion = parse_smiles("CC(=O)[O-]");
    CHECK(anion.atoms[3].formal_charge == -1);
    CHECK(anion.atoms[3].hydrogens == 0);

    const Molecule pyrrole = parse_smiles("c1cc[nH]c1");
    CHECK(pyrrole.atoms[3].aromatic);
    CHECK(pyrrole.atoms[3].hydrogens == 1);

    const Molecule dication = parse_smiles("[Ca+2]");
    CHECK(dication.atoms[0].formal_charge == 2);
}

TEST_CASE("ring closure variants") {
    const Molecule a = parse_smiles("C1CCCCC1");
    CHECK(a.rings.size() == 1);
    CHECK(count_order(a, BondOrder::Single) == 6);

    // Bond symbol on one side of the closure applies to the ring bond.
    const Molecule b = parse_smiles("C=1CCCCC1");
    CHECK(count_order(b, BondOrder::Double) == 1);

    // Two-digit closures.
    const Molecule c = parse_smiles("C%10CCCCC%10");
    CHECK(c.rings.size() == 1);

    // Fused rings: naphthalene has two six-rings.
    const Molecule naph = parse_smiles("c1ccc2ccccc2c1");
    CHECK(naph.atoms.size() == 10);
    CHECK(naph.bonds.size() == 11);
    REQUIRE(naph.rings.size() == 2);
    CHECK(naph.rings[0].size() == 6);
    CHECK(naph.rings[1].size() == 6);
}

TEST_CASE("valence-driven implicit hydrogens") {
    // Nitro nitrogen promotes to valence 5.
    const Molecule nitro = parse_smiles("CN(=O)=O");
    CHECK(nitro.atoms[1].hydrogens == 0);

    const Molecule sulfone = parse_smiles("CS(=O)(=O)C");
    CHECK(sulfone.atoms[1].hydrogens == 0);

    const Molecule triple = parse_smiles("C#N");
    CHECK(triple.atoms[0].hydrogens == 1);
    CHECK(triple.atoms[1].hydrogens == 0);
}

TEST_CASE("parse errors carry kind and offset") {
    CHECK(kind_of("C1CC") == ParseErrorKind::UnmatchedRingClosure);
    CHECK(kind_of("C(C(C)C") == ParseErrorKind::UnbalancedParenthesis);
    CHECK(kind_of("CC)C") == ParseErrorKind::UnbalancedParenthesis);
    CHECK(kind_of("Qx") == ParseErrorKind::UnknownElement);
    CHECK(kind_of("[Zz]") == ParseErrorKind::UnknownElement);
    CHECK(kind_of("C(C)(C)(C)(C)C") == ParseErrorKind::ValenceViolation);
    CHECK(kind_of("O=C=O=C") == ParseErrorKind::ValenceViolation);
    CHECK(kind_of("C..C") == ParseErrorKind::Syntax);
    CHECK(kind_of("C1C1") == ParseErrorKind::UnmatchedRingClosure);  // duplicate bond
    CHECK(kind_of("C11") == ParseErrorKind::UnmatchedRingClosure);   // self closure
    CHECK(kind_of("F[C@H](Cl)Br") == ParseErrorKind::Syntax);        // stereo unsupported

    try {
        parse_smiles("CC(C");
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);  // points at the unclosed '('... offset of last char
    }
    try {
        parse_smiles("CCQ");
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 2);
    }
}

TEST_CASE("aromatic bond only between aromatic atoms") {
    CHECK_THROWS_AS(parse_smiles("C:C"), ParseError);
    const Molecule biphenyl = parse_smiles("c1ccccc1-c1ccccc1");
    CHECK(count_order(biphenyl, BondOrder::Single) == 1);
    CHECK(count_order(biphenyl, BondOrder::Aromatic) == 12);
    for (const auto& b : biphenyl.bonds) {
        if (b.order == BondOrder::Aromatic) {
            CHECK(biphenyl.atoms[b.a].aromatic);
            CHECK(biphenyl.atoms[b.b].aromatic);
        }
    }
}

TEST_CASE("round trip: re-serialized SMILES parses to an isomorphic graph") {
    const char* cases[] = {
        "C",
        "CC(=O)O",
        "c1ccccc1",
        "c1ccc2ccccc2c1",
        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
        "C1CCCCC1CC(=O)N",
        "c1ccccc1-c1ccccc1",
        "CN(=O)=O",
        "[NH4+]",
        "CC(=O)[O-]",
        "c1cc[nH]c1",
        "C#Cc1ccsc1",
        "O=C(O)C1CCN(CC1)S(=O)(=O)c1ccc(F)cc1",
    };
    for (const char* s : cases) {
        CAPTURE(s);
        const Molecule m = parse_smiles(s);
        const std::string out = write_smiles(m);
        CAPTURE(out);
        const Molecule back = parse_smiles(out);
        CHECK(moluq::chem::graph_key(m) == moluq::chem::graph_key(back));
        CHECK(m.atoms.size() == back.atoms.size());
        CHECK(m.bonds.size() == back.bonds.size());
    }
}
