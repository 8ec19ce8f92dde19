#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moluq/data/dataset.hpp"

namespace moluq::data {

enum class SplitKind { Random, Scaffold };

// Disjoint, exhaustive partition of the record indices.
struct SplitAssignment {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    SplitKind kind = SplitKind::Random;
    std::vector<std::string> warnings;

    std::size_t total() const { return train.size() + validation.size() + test.size(); }
    std::string id() const;  // "rand<seed>" or "scaffold"
};

inline constexpr double kTrainFraction = 0.5;
inline constexpr double kValidationFraction = 0.2;
inline constexpr double kTestFraction = 0.3;

// Seeded Fisher-Yates permutation partitioned 50/20/30. mt19937_64 plus our
// own shuffle keeps assignments identical across platforms.
SplitAssignment random_split(const Dataset& d, std::uint64_t seed);

// Groups molecules by Murcko scaffold key, sorts clusters by descending
// size, and greedily assigns each to the partition furthest below its
// 50/20/30 capacity (ties prefer train, then validation, then test). No
// scaffold key ever spans two partitions. Acyclic molecules form one shared
// cluster. A partition left empty is reported as a degenerate-split warning.
SplitAssignment scaffold_split(const Dataset& d);

// JSON manifest {kind, seed, train/val/test index arrays}.
std::string split_to_json(const SplitAssignment& s);
SplitAssignment split_from_json(const std::string& json_text);

}  // namespace moluq::data
