#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "moluq/chem/molecule.hpp"
#include "moluq/common/error.hpp"

namespace moluq::chem {

enum class ParseErrorKind {
    Syntax,
    UnknownElement,
    UnbalancedParenthesis,
    UnmatchedRingClosure,
    ValenceViolation,
};

class ParseError : public Error {
public:
    ParseError(ParseErrorKind kind, std::size_t offset, const std::string& what);

    ParseErrorKind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }  // character offset in the input

private:
    ParseErrorKind kind_;
    std::size_t offset_;
};

// Parses the supported SMILES subset: organic-subset atoms (upper and
// aromatic lowercase), bracket atoms with charge and explicit H count, ring
// closures (digits and %nn), branches, and the bond symbols - = # :.
// Stereo descriptors, isotopes, and multi-fragment input ('.') are rejected.
// Implicit hydrogens come from standard valences with aromatic bonds counted
// as 1.5; a negative implicit count is a valence violation.
Molecule parse_smiles(std::string_view text);

// Serializes a Molecule back into the supported subset. Round-tripping
// through parse_smiles yields an isomorphic graph; the string is not a
// canonical form.
std::string write_smiles(const Molecule& m);

}  // namespace moluq::chem
