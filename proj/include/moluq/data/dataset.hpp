#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "moluq/chem/logp.hpp"

namespace moluq::data {

struct Record {
    std::string smiles;
    double target = 0.0;
};

struct RejectedRow {
    std::size_t line = 0;  // 1-based line number in the source file
    std::string smiles;
    std::string reason;
};

// Immutable after load. SMILES are unique (duplicates dropped keep-first)
// and every target is finite.
struct Dataset {
    std::vector<Record> records;
    std::string name;
    std::string target_units;

    std::size_t size() const { return records.size(); }
};

struct LoadReport {
    Dataset dataset;
    std::vector<RejectedRow> rejected;    // unparseable SMILES, with line numbers
    std::vector<std::string> warnings;    // duplicates and other non-fatal issues
};

// CSV with header `smiles,target`. Rows whose SMILES does not parse are
// rejected (line-numbered); duplicate SMILES keep the first row and warn.
// Missing columns, non-numeric targets, and empty files are errors.
LoadReport load_csv(const std::string& path, const std::string& name = "",
                    const std::string& units = "");

// Deduplicated union of the sources with noiseless heuristic-logP targets.
Dataset generate_clogp_dataset(const std::vector<Dataset>& sources,
                               const chem::LogPTable& table = chem::LogPTable::builtin());

// Fit on training targets only; population convention (divide by n).
struct TargetScaler {
    double mean = 0.0;
    double std = 1.0;

    double transform(double y) const { return (y - mean) / std; }
    double inverse(double t) const { return t * std + mean; }
};

// Throws DataError when the targets have zero variance.
TargetScaler standardize_targets(const std::vector<double>& train_targets);

}  // namespace moluq::data
