#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "moluq/chem/fingerprint.hpp"
#include "moluq/chem/molecule.hpp"
#include "moluq/common/rng.hpp"

namespace moluq::nnet {

enum class Featurizer { Graph, Fingerprint };
enum class Head { Scalar, MeanVariance };

struct NetConfig {
    Featurizer featurizer = Featurizer::Fingerprint;
    Head head = Head::Scalar;
    int message_steps = 3;
    int hidden_size = 64;        // paper-scale default is 300
    int dense_layers = 2;
    double dropout = 0.0;        // applied to dense hidden activations
    int fingerprint_length = 2048;
    double variance_floor = 1e-6;
};

// Number of atom features for the graph featurizer: one-hot element
// (top 10 + other), aromatic flag, one-hot degree 0..5, formal charge.
constexpr int kAtomFeatureCount = 11 + 1 + 6 + 1;

int parameter_count(const NetConfig& config);

// A molecule prepared for the network. Graph models need the adjacency;
// fingerprint models need the set bits.
struct Sample {
    Featurizer kind = Featurizer::Fingerprint;
    Eigen::MatrixXd atom_features;           // atoms x kAtomFeatureCount
    std::vector<std::vector<int>> adjacency; // graph featurizer
    std::vector<int> bits;                   // fingerprint featurizer
};

Sample featurize(const chem::Molecule& m, const NetConfig& config);
Sample featurize(const chem::Fingerprint& fp, const NetConfig& config);

struct Output {
    double prediction = 0.0;
    std::optional<double> variance;  // MeanVariance head only, > 0
    Eigen::VectorXd embedding;       // activation immediately before the head
};

// Parameters are a flat vector; layer views are Eigen::Maps into it.
struct TrainedModel {
    NetConfig config;
    std::vector<double> parameters;
    std::vector<double> train_losses;       // per epoch
    std::vector<double> validation_rmse;    // per epoch
    std::vector<double> epoch_learning_rates;

    void save(const std::string& path) const;        // versioned binary blob
    static TrainedModel load(const std::string& path);
};

// Forward pass. When `dropout_source` is given, dropout masks are drawn from
// it at inference (MC dropout); otherwise inference applies no dropout.
// Training uses the same code path with its own mask source.
Output forward(const TrainedModel& model, const Sample& sample,
               Rng* dropout_source = nullptr);

// Gaussian negative log likelihood of one prediction (the MVE training
// loss): 0.5 ln(2 pi) + 0.5 ln(var) + (y - mean)^2 / (2 var).
double mve_loss(double mean, double variance, double truth);

// Loss summed over the batch and its gradient w.r.t. every parameter
// (scalar head: 0.5 * squared error; MVE head: mve_loss). Masks for dropout
// are drawn from `dropout_source` when given, exactly as in forward().
struct BatchGradient {
    double loss = 0.0;  // mean over the batch
    Eigen::VectorXd gradient;
};

BatchGradient gradient(const TrainedModel& model,
                       const std::vector<const Sample*>& batch,
                       const std::vector<double>& targets,
                       Rng* dropout_source = nullptr);

// Random initialization (uniform scaled by fan-in).
std::vector<double> init_parameters(const NetConfig& config, std::uint64_t seed);

}  // namespace moluq::nnet
