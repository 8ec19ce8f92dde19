#include "moluq/chem/logp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "moluq/common/error.hpp"

namespace moluq::chem {

namespace {

struct Entry {
    const char* element;
    bool aromatic;
    double coefficient;
};

// v1 coefficients (log10 units). Magnitudes follow the usual ordering of
// atom-contribution logP schemes: halogens and sulfur lipophilic, nitrogen
// and oxygen hydrophilic, aromatic carbon above aliphatic.
constexpr Entry kBuiltin[] = {
    {"C", false, 0.20},  {"C", true, 0.29},
    {"N", false, -0.90}, {"N", true, -0.50},
    {"O", false, -0.75}, {"O", true, -0.45},
    {"S", false, 0.25},  {"S", true, 0.40},
    {"P", false, -0.50}, {"P", true, -0.50},
    {"F", false, 0.10},  {"Cl", false, 0.65},
    {"Br", false, 0.85}, {"I", false, 1.10},
    {"B", false, -0.10}, {"B", true, -0.10},
};

}  // namespace

const LogPTable& LogPTable::builtin() {
    static const LogPTable table = [] {
        LogPTable t;
        for (const Entry& e : kBuiltin) t.set(e.element, e.aromatic, e.coefficient);
        return t;
    }();
    return table;
}

LogPTable LogPTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open contribution table: " + path);
    LogPTable t;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("version=");
            if (pos != std::string::npos) t.version_ = line.substr(pos + 8);
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line.find("element") != std::string::npos) continue;
        }
        std::istringstream row(line);
        std::string element, aromatic, coeff;
        if (!std::getline(row, element, ',') || !std::getline(row, aromatic, ',') ||
            !std::getline(row, coeff)) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
        }
        const bool arom = (aromatic == "1" || aromatic == "true");
        try {
            t.set(element, arom, std::stod(coeff));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": bad coefficient '" +
                            coeff + "'");
        }
    }
    if (t.coeffs_.empty()) throw DataError("empty contribution table: " + path);
    return t;
}

double LogPTable::coefficient(const std::string& element, bool aromatic) const {
    auto it = coeffs_.find({element, aromatic});
    if (it == coeffs_.end()) {
        // Aromatic flag falls back to the aliphatic row before failing.
        it = coeffs_.find({element, false});
    }
    if (it == coeffs_.end()) {
        throw DataError("element not in contribution table: " + element);
    }
    return it->second;
}

void LogPTable::set(const std::string& element, bool aromatic, double value) {
    coeffs_[{element, aromatic}] = value;
}

double heuristic_logp(const Molecule& m, const LogPTable& table) {
    // Summed in sorted order so the value is bit-identical under any atom
    // renumbering of the same graph.
    std::vector<double> contributions;
    contributions.reserve(m.atoms.size());
    for (const Atom& a : m.atoms) {
        contributions.push_back(table.coefficient(a.element, a.aromatic));
    }
    std::sort(contributions.begin(), contributions.end());
    double total = 0.0;
    for (double c : contributions) total += c;
    return total;
}

}  // namespace moluq::chem
