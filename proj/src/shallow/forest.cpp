#include "moluq/shallow/forest.hpp"

#include <algorithm>
#include <cmath>

#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"
#include "moluq/common/rng.hpp"

namespace moluq::shallow {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double reduction = 0.0;
};

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const Eigen::VectorXd& y;
    int min_leaf;
    Rng& rng;
    std::vector<std::pair<double, double>> scratch;  // (value, target)

    // Best variance-reduction split over a random sqrt(d) feature subset.
    // Thresholds are midpoints between distinct adjacent values, so rows
    // with equal feature values always land on the same side and the result
    // does not depend on their order.
    SplitChoice best_split(const std::vector<int>& rows) {
        const int d = static_cast<int>(x.cols());
        const int k = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
        const auto features = rng.sample_without_replacement(static_cast<std::size_t>(d),
                                                             static_cast<std::size_t>(k));

        double total = 0.0, total_sq = 0.0;
        for (int r : rows) {
            total += y[r];
            total_sq += y[r] * y[r];
        }
        const double n = static_cast<double>(rows.size());
        const double parent_sse = total_sq - total * total / n;

        SplitChoice best;
        std::vector<int> sorted_features(features.begin(), features.end());
        std::sort(sorted_features.begin(), sorted_features.end());
        for (int f : sorted_features) {
            scratch.clear();
            for (int r : rows) scratch.push_back({x(r, f), y[r]});
            std::sort(scratch.begin(), scratch.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
                left_sum += scratch[i].second;
                left_sq += scratch[i].second * scratch[i].second;
                const std::size_t nl = i + 1;
                const std::size_t nr = scratch.size() - nl;
                if (scratch[i].first == scratch[i + 1].first) continue;
                if (nl < static_cast<std::size_t>(min_leaf) ||
                    nr < static_cast<std::size_t>(min_leaf)) {
                    continue;
                }
                const double right_sum = total - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                                   (right_sq - right_sum * right_sum / static_cast<double>(nr));
                const double reduction = parent_sse - sse;
                if (reduction > best.reduction + 1e-12) {
                    best.feature = f;
                    best.threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
                    best.reduction = reduction;
                }
            }
        }
        return best;
    }

    int build(std::vector<Forest::Node>& nodes, const std::vector<int>& rows);
};

}  // namespace

double Forest::Tree::eval(const Eigen::VectorXd& q) const {
    int at = 0;
    while (nodes[at].feature >= 0) {
        at = (q[nodes[at].feature] <= nodes[at].threshold) ? nodes[at].left : nodes[at].right;
    }
    return nodes[at].value;
}

Forest Forest::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                   const ForestConfig& config) {
    const int n = static_cast<int>(inputs.rows());
    std::vector<std::vector<int>> resamples;
    resamples.reserve(static_cast<std::size_t>(config.tree_count));
    for (int t = 0; t < config.tree_count; ++t) {
        Rng rng(derive_seed(config.seed, "forest.resample." + std::to_string(t)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        for (int& r : rows) r = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        resamples.push_back(std::move(rows));
    }
    return fit_with_resamples(inputs, targets, resamples, config);
}

int TreeBuilder::build(std::vector<Forest::Node>& nodes, const std::vector<int>& rows) {
    double mean = 0.0;
    for (int r : rows) mean += y[r];
    mean /= static_cast<double>(rows.size());

    const int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[index].value = mean;

    if (rows.size() < 2 * static_cast<std::size_t>(min_leaf)) return index;
    const SplitChoice split = best_split(rows);
    if (split.feature < 0) return index;

    std::vector<int> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (int r : rows) {
        (x(r, split.feature) <= split.threshold ? left : right).push_back(r);
    }
    nodes[index].feature = split.feature;
    nodes[index].threshold = split.threshold;
    const int l = build(nodes, left);
    nodes[index].left = l;
    const int r = build(nodes, right);
    nodes[index].right = r;
    return index;
}

Forest Forest::fit_with_resamples(const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& targets,
                                  const std::vector<std::vector<int>>& resamples,
                                  const ForestConfig& config) {
    if (inputs.rows() < 2) throw NumericalError("rf_fit: need at least two rows");
    if (inputs.rows() != targets.size()) throw NumericalError("rf_fit: row mismatch");
    if (config.tree_count < 1) throw NumericalError("rf_fit: tree count must be >= 1");
    if (resamples.size() != static_cast<std::size_t>(config.tree_count)) {
        throw NumericalError("rf_fit: one resample list per tree required");
    }

    Forest forest;
    forest.trees_.resize(resamples.size());
    for (std::size_t t = 0; t < resamples.size(); ++t) {
        Rng rng(derive_seed(config.seed, "forest.features." + std::to_string(t)));
        TreeBuilder builder{inputs, targets, config.min_leaf, rng, {}};
        builder.build(forest.trees_[t].nodes, resamples[t]);
    }
    return forest;
}

ForestPrediction Forest::predict(const Eigen::VectorXd& query) const {
    ForestPrediction out;
    std::vector<double> values;
    values.reserve(trees_.size());
    for (const Tree& t : trees_) values.push_back(t.eval(query));
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    for (double v : values) out.variance += (v - out.mean) * (v - out.mean);
    out.variance /= static_cast<double>(values.size());
    return out;
}

}  // namespace moluq::shallow
