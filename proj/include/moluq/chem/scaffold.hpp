#pragma once

#include <string>

#include "moluq/chem/molecule.hpp"

namespace moluq::chem {

// Key shared by every fully acyclic molecule.
inline constexpr const char* kEmptyScaffoldKey = "acyclic";

// Ring systems and linkers: degree-1 non-ring atoms are deleted iteratively,
// then the remainder is reduced to a renumbering-invariant key (iterated
// Weisfeiler-Leman refinement over element/bond labels, hashed as a
// multiset). Molecules differing only in acyclic substituents share a key.
std::string murcko_scaffold(const Molecule& m);

// The scaffold key machinery doubles as a graph identity: equal keys for
// isomorphic graphs under the same labelling. Exposed for round-trip checks.
std::string graph_key(const Molecule& m);

}  // namespace moluq::chem
