#include "moluq/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "moluq/chem/scaffold.hpp"
#include "moluq/chem/smiles.hpp"
#include "moluq/common/error.hpp"
#include "moluq/common/rng.hpp"

namespace moluq::data {

namespace {

constexpr std::size_t kMinDatasetSize = 10;

std::size_t rounded(double x) {
    return static_cast<std::size_t>(std::llround(x));
}

}  // namespace

std::string SplitAssignment::id() const {
    return kind == SplitKind::Random ? "rand" + std::to_string(seed) : "scaffold";
}

SplitAssignment random_split(const Dataset& d, std::uint64_t seed) {
    const std::size_t n = d.size();
    if (n < kMinDatasetSize) {
        throw DataError("random_split: dataset too small (" + std::to_string(n) + " rows)");
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);

    const std::size_t n_train = rounded(kTrainFraction * static_cast<double>(n));
    const std::size_t n_val = rounded(kValidationFraction * static_cast<double>(n));

    SplitAssignment s;
    s.seed = seed;
    s.kind = SplitKind::Random;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                        perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    return s;
}

SplitAssignment scaffold_split(const Dataset& d) {
    const std::size_t n = d.size();
    if (n < kMinDatasetSize) {
        throw DataError("scaffold_split: dataset too small (" + std::to_string(n) + " rows)");
    }

    // Cluster rows by scaffold key; map iteration gives a deterministic
    // (key-sorted) base order before the size sort.
    std::map<std::string, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        const chem::Molecule m = chem::parse_smiles(d.records[i].smiles);
        clusters[chem::murcko_scaffold(m)].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> order;
    order.reserve(clusters.size());
    for (const auto& [key, rows] : clusters) order.push_back(&rows);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* x, const auto* y) { return x->size() > y->size(); });

    SplitAssignment s;
    s.kind = SplitKind::Scaffold;
    std::vector<std::size_t>* bins[3] = {&s.train, &s.validation, &s.test};
    const double capacity[3] = {kTrainFraction * static_cast<double>(n),
                                kValidationFraction * static_cast<double>(n),
                                kTestFraction * static_cast<double>(n)};
    for (const auto* cluster : order) {
        // Largest remaining deficit wins; ties prefer train, then val, then test.
        int best = 0;
        double best_deficit = capacity[0] - static_cast<double>(bins[0]->size());
        for (int b = 1; b < 3; ++b) {
            const double deficit = capacity[b] - static_cast<double>(bins[b]->size());
            if (deficit > best_deficit) {
                best = b;
                best_deficit = deficit;
            }
        }
        bins[best]->insert(bins[best]->end(), cluster->begin(), cluster->end());
    }
    for (auto* bin : bins) std::sort(bin->begin(), bin->end());

    if (s.validation.empty() || s.test.empty()) {
        s.warnings.push_back("degenerate scaffold split: " +
                             std::string(s.validation.empty() ? "validation" : "test") +
                             " partition is empty");
    }
    return s;
}

std::string split_to_json(const SplitAssignment& s) {
    nlohmann::json j;
    j["kind"] = s.kind == SplitKind::Random ? "random" : "scaffold";
    j["seed"] = s.seed;
    j["train"] = s.train;
    j["val"] = s.validation;
    j["test"] = s.test;
    return j.dump(2) + "\n";
}

SplitAssignment split_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    SplitAssignment s;
    s.kind = j.at("kind").get<std::string>() == "random" ? SplitKind::Random
                                                         : SplitKind::Scaffold;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.validation = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
}

}  // namespace moluq::data
