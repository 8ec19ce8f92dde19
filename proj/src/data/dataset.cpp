#include "moluq/data/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "moluq/chem/smiles.hpp"
#include "moluq/common/error.hpp"

namespace moluq::data {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

LoadReport load_csv(const std::string& path, const std::string& name,
                    const std::string& units) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);

    LoadReport report;
    report.dataset.name = name.empty() ? std::filesystem::path(path).stem().string() : name;
    report.dataset.target_units = units;

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    {
        std::istringstream header(trim(line));
        std::string c1, c2;
        std::getline(header, c1, ',');
        std::getline(header, c2, ',');
        if (trim(c1) != "smiles" || trim(c2) != "target") {
            throw DataError(path + ": expected header 'smiles,target', got '" + trim(line) + "'");
        }
    }

    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos) {
            throw DataError(path + ":" + std::to_string(lineno) + ": missing target column");
        }
        const std::string smiles = trim(row.substr(0, comma));
        const std::string target_text = trim(row.substr(comma + 1));

        double target = 0.0;
        try {
            std::size_t used = 0;
            target = std::stod(target_text, &used);
            if (used != target_text.size()) throw std::invalid_argument(target_text);
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric target '" +
                            target_text + "'");
        }
        if (!std::isfinite(target)) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-finite target");
        }

        try {
            chem::parse_smiles(smiles);
        } catch (const chem::ParseError& e) {
            report.rejected.push_back({lineno, smiles, e.what()});
            continue;
        }

        if (!seen.insert(smiles).second) {
            report.warnings.push_back(path + ":" + std::to_string(lineno) +
                                      ": duplicate SMILES '" + smiles + "' dropped (keep-first)");
            continue;
        }
        report.dataset.records.push_back({smiles, target});
    }
    if (report.dataset.records.empty()) {
        throw DataError(path + ": no valid rows");
    }
    return report;
}

Dataset generate_clogp_dataset(const std::vector<Dataset>& sources,
                               const chem::LogPTable& table) {
    Dataset out;
    out.name = "clogp";
    out.target_units = "log10";
    std::set<std::string> seen;
    for (const Dataset& src : sources) {
        for (const Record& r : src.records) {
            if (!seen.insert(r.smiles).second) continue;
            const chem::Molecule m = chem::parse_smiles(r.smiles);
            out.records.push_back({r.smiles, chem::heuristic_logp(m, table)});
        }
    }
    return out;
}

TargetScaler standardize_targets(const std::vector<double>& train_targets) {
    if (train_targets.empty()) throw DataError("standardize_targets: no targets");
    double mean = 0.0;
    for (double y : train_targets) mean += y;
    mean /= static_cast<double>(train_targets.size());
    double var = 0.0;
    for (double y : train_targets) var += (y - mean) * (y - mean);
    var /= static_cast<double>(train_targets.size());
    if (var <= 0.0) throw DataError("standardize_targets: zero-variance targets");
    return TargetScaler{mean, std::sqrt(var)};
}

}  // namespace moluq::data
