#pragma once

#include <optional>
#include <string>
#include <vector>

namespace moluq::stats {

enum class Direction { HigherBetter, LowerBetter };

// One pairwise comparison. Two z variants are reported: `z` divides the
// centered rank sum by the raw variance term n(n+1)(2n+1)/24 (the headline
// number), `z_sqrt` by its square root (the conventional normalization).
// Both always share sign.
struct ComparisonCell {
    std::string primary;
    std::string secondary;
    std::string metric;
    std::vector<double> differences;  // after zero-difference removal
    double rank_sum = 0.0;            // S: ranks where the primary outperformed
    int n = 0;                        // pairs remaining after tie removal
    bool defined = false;             // false when every difference is zero
    double z = 0.0;
    double z_sqrt = 0.0;
};

// Signed-rank z-score of primary vs secondary scores. Zero differences are
// dropped with n decremented; |d| ties keep their input order on both
// orientations, so swapping primary and secondary exactly negates z.
ComparisonCell wsrt_z(const std::vector<double>& primary_scores,
                      const std::vector<double>& secondary_scores, Direction direction);

// All-pairs matrix for one metric. scores[i] holds estimator i's score per
// (dataset, split) cell, aligned across estimators. The diagonal is left
// undefined. Missing (NaN) scores are an error listing the offending ids.
struct ComparisonMatrix {
    std::vector<std::string> estimator_ids;
    std::string metric;
    std::vector<std::vector<ComparisonCell>> cells;  // [primary][secondary]

    std::string to_csv() const;        // z values, row = primary
    std::string to_heatmap_json() const;
};

ComparisonMatrix comparison_matrix(const std::vector<std::string>& estimator_ids,
                                   const std::vector<std::vector<double>>& scores,
                                   const std::string& metric, Direction direction);

}  // namespace moluq::stats
