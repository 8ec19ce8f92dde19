#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace moluq::shallow {

struct ForestPrediction {
    double mean = 0.0;
    double variance = 0.0;  // population variance across tree outputs
};

struct ForestConfig {
    int tree_count = 128;
    int min_leaf = 3;
    std::uint64_t seed = 0;
};

// Regression forest: variance-reduction splits, sqrt(d) feature subsampling
// per split, bootstrap resample per tree. Fully deterministic given the
// seed; per-tree streams are derived from (seed, tree index) so training is
// independent of incidental row order once the resampled rows are fixed.
class Forest {
public:
    static Forest fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                      const ForestConfig& config = {});

    // Same, with caller-provided bootstrap rows (one index list per tree).
    // This is the seed-to-resample mapping: fit() draws the lists from the
    // config seed and delegates here.
    static Forest fit_with_resamples(const Eigen::MatrixXd& inputs,
                                     const Eigen::VectorXd& targets,
                                     const std::vector<std::vector<int>>& resamples,
                                     const ForestConfig& config = {});

    ForestPrediction predict(const Eigen::VectorXd& query) const;

    int tree_count() const { return static_cast<int>(trees_.size()); }

    struct Node {
        int feature = -1;        // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;      // leaf mean
    };

private:
    struct Tree {
        std::vector<Node> nodes;
        double eval(const Eigen::VectorXd& x) const;
    };

    std::vector<Tree> trees_;
};

}  // namespace moluq::shallow
