#pragma once

#include <map>
#include <string>

#include "moluq/chem/molecule.hpp"

namespace moluq::chem {

// Atom-contribution table for the heuristic octanol-water partition
// estimate. Shipped as a versioned CSV (element, aromatic flag,
// coefficient); hydrogens contribute zero by convention so the value is a
// sum over heavy atoms only.
class LogPTable {
public:
    static const LogPTable& builtin();  // same values as data/clogp_table_v1.csv
    static LogPTable load_csv(const std::string& path);

    // Throws DataError for elements absent from the table.
    double coefficient(const std::string& element, bool aromatic) const;

    void set(const std::string& element, bool aromatic, double value);
    const std::string& version() const { return version_; }

private:
    std::map<std::pair<std::string, bool>, double> coeffs_;
    std::string version_ = "v1";
};

// Deterministic, noiseless, additive over atom contributions.
double heuristic_logp(const Molecule& m, const LogPTable& table = LogPTable::builtin());

}  // namespace moluq::chem
