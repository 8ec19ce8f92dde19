#pragma once

#include <Eigen/Dense>

namespace moluq::shallow {

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;  // includes the noise term, always > 0
};

// Exact Gaussian process with the linear kernel
// k(x, x') = prior_variance * x.x', observation noise `noise_variance`.
// Fitted in function space (n x n Cholesky); equivalent to Bayesian linear
// regression with an isotropic Gaussian weight prior.
class LinearGP {
public:
    // Throws on non-finite inputs, noise <= 0, or a factorization failure
    // (which signals that the noise is too small for the data).
    static LinearGP fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                        double noise_variance = 0.1, double prior_variance = 1.0);

    GpPrediction predict(const Eigen::VectorXd& query) const;

    Eigen::Index input_dim() const { return inputs_.cols(); }
    Eigen::Index train_size() const { return inputs_.rows(); }
    double noise_variance() const { return noise_variance_; }
    double prior_variance() const { return prior_variance_; }

private:
    Eigen::MatrixXd inputs_;
    Eigen::LLT<Eigen::MatrixXd> chol_;   // of prior * X X^T + noise * I
    Eigen::VectorXd alpha_;              // K^{-1} y
    double noise_variance_ = 0.1;
    double prior_variance_ = 1.0;
};

}  // namespace moluq::shallow
