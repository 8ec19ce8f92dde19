#include "moluq/stats/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moluq/common/error.hpp"
#include "moluq/common/format.hpp"

namespace moluq::stats {

ComparisonCell wsrt_z(const std::vector<double>& primary_scores,
                      const std::vector<double>& secondary_scores, Direction direction) {
    if (primary_scores.size() != secondary_scores.size()) {
        throw Error("wsrt_z: score vectors differ in length");
    }
    if (primary_scores.size() < 2) throw Error("wsrt_z: need at least 2 paired scores");
    for (std::size_t i = 0; i < primary_scores.size(); ++i) {
        if (!std::isfinite(primary_scores[i]) || !std::isfinite(secondary_scores[i])) {
            throw Error("wsrt_z: missing score at pair " + std::to_string(i));
        }
    }

    ComparisonCell cell;
    for (std::size_t i = 0; i < primary_scores.size(); ++i) {
        const double d = primary_scores[i] - secondary_scores[i];
        if (d != 0.0) cell.differences.push_back(d);  // drop-and-decrement tie rule
    }
    cell.n = static_cast<int>(cell.differences.size());
    if (cell.n == 0) {
        cell.defined = false;
        return cell;
    }

    // Rank by |d|, stable in input order so the ranking is symmetric under
    // swapping primary and secondary.
    std::vector<std::size_t> order(cell.differences.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&cell](std::size_t a, std::size_t b) {
        return std::abs(cell.differences[a]) < std::abs(cell.differences[b]);
    });

    double s = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const double d = cell.differences[order[rank]];
        const bool primary_won = direction == Direction::HigherBetter ? d > 0.0 : d < 0.0;
        if (primary_won) s += static_cast<double>(rank + 1);
    }
    cell.rank_sum = s;

    const double n = static_cast<double>(cell.n);
    const double centered = s - 0.25 * n * (n + 1.0);
    const double var_term = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    cell.z = centered / var_term;
    cell.z_sqrt = centered / std::sqrt(var_term);
    cell.defined = true;
    return cell;
}

ComparisonMatrix comparison_matrix(const std::vector<std::string>& estimator_ids,
                                   const std::vector<std::vector<double>>& scores,
                                   const std::string& metric, Direction direction) {
    if (estimator_ids.size() != scores.size()) {
        throw Error("comparison_matrix: ids/scores size mismatch");
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != scores[0].size()) {
            throw Error("comparison_matrix: unaligned score vectors for " + estimator_ids[i]);
        }
        for (double v : scores[i]) {
            if (!std::isfinite(v)) {
                missing.push_back(estimator_ids[i]);
                break;
            }
        }
    }
    if (!missing.empty()) {
        std::string what = "comparison_matrix: missing scores for:";
        for (const auto& id : missing) what += " " + id;
        throw Error(what);
    }

    ComparisonMatrix m;
    m.estimator_ids = estimator_ids;
    m.metric = metric;
    m.cells.resize(estimator_ids.size());
    for (std::size_t i = 0; i < estimator_ids.size(); ++i) {
        m.cells[i].resize(estimator_ids.size());
        for (std::size_t j = 0; j < estimator_ids.size(); ++j) {
            if (i == j) continue;  // diagonal stays undefined
            m.cells[i][j] = wsrt_z(scores[i], scores[j], direction);
            m.cells[i][j].primary = estimator_ids[i];
            m.cells[i][j].secondary = estimator_ids[j];
            m.cells[i][j].metric = metric;
        }
    }
    return m;
}

std::string ComparisonMatrix::to_csv() const {
    std::ostringstream out;
    out << "primary";
    for (const auto& id : estimator_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < estimator_ids.size(); ++i) {
        out << estimator_ids[i];
        for (std::size_t j = 0; j < estimator_ids.size(); ++j) {
            out << ',';
            if (i != j && cells[i][j].defined) out << format_double(cells[i][j].z);
        }
        out << '\n';
    }
    return out.str();
}

std::string ComparisonMatrix::to_heatmap_json() const {
    nlohmann::json j;
    j["metric"] = metric;
    j["estimators"] = estimator_ids;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < estimator_ids.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j2 = 0; j2 < estimator_ids.size(); ++j2) {
            if (i == j2 || !cells[i][j2].defined) {
                row.push_back(nullptr);
            } else {
                row.push_back(cells[i][j2].z);
            }
        }
        rows.push_back(row);
    }
    j["z"] = rows;
    nlohmann::json rows_sqrt = nlohmann::json::array();
    for (std::size_t i = 0; i < estimator_ids.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j2 = 0; j2 < estimator_ids.size(); ++j2) {
            if (i == j2 || !cells[i][j2].defined) {
                row.push_back(nullptr);
            } else {
                row.push_back(cells[i][j2].z_sqrt);
            }
        }
        rows_sqrt.push_back(row);
    }
    j["z_sqrt"] = rows_sqrt;
    return j.dump(2) + "\n";
}

}  // namespace moluq::stats
