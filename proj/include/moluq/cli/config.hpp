#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moluq/uq/estimators.hpp"

namespace moluq::cli {

// Run configuration parsed from a flat `key = value` file (# comments).
// Unknown keys are config errors; every key has a schema default, so an
// empty file is a valid paper-profile run. `profile = desk` swaps in the
// desk-scale defaults before explicit keys are applied.
struct Config {
    std::string profile = "paper";
    std::uint64_t master_seed = 20240101;
    std::vector<std::string> dataset_paths;
    bool generate_clogp = false;  // append the union dataset with heuristic targets
    int random_splits = 8;
    bool scaffold_split = true;
    std::vector<std::string> estimators;  // resolved roster ("all" expands)
    int workers = 1;

    uq::EstimatorConfig estimator;

    // Effective key-value view (defaults merged, normalized formatting);
    // the config hash is the FNV-1a of its sorted lines, so it covers every
    // tunable that affects outputs.
    std::map<std::string, std::string> effective;
    std::string hash() const;

    static Config load(const std::string& path);
    static Config from_text(const std::string& text);

    // The schema as "key<TAB>default(paper)<TAB>default(desk)" lines.
    static std::string schema_text();
};

}  // namespace moluq::cli
