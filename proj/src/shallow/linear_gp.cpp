#include "moluq/shallow/linear_gp.hpp"

#include <string>

#include "moluq/common/error.hpp"

namespace moluq::shallow {

LinearGP LinearGP::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                       double noise_variance, double prior_variance) {
    if (inputs.rows() < 1) throw NumericalError("gp_fit: need at least one row");
    if (inputs.rows() != targets.size()) {
        throw NumericalError("gp_fit: inputs/targets row mismatch");
    }
    if (!(noise_variance > 0.0)) throw NumericalError("gp_fit: noise variance must be > 0");
    if (!(prior_variance > 0.0)) throw NumericalError("gp_fit: prior variance must be > 0");
    if (!inputs.allFinite() || !targets.allFinite()) {
        throw NumericalError("gp_fit: non-finite inputs");
    }

    LinearGP gp;
    gp.inputs_ = inputs;
    gp.noise_variance_ = noise_variance;
    gp.prior_variance_ = prior_variance;

    Eigen::MatrixXd K = prior_variance * (inputs * inputs.transpose());
    K.diagonal().array() += noise_variance;
    gp.chol_.compute(K);
    if (gp.chol_.info() != Eigen::Success) {
        throw NumericalError(
            "gp_fit: factorization failed (noise variance " +
            std::to_string(noise_variance) + " too small for this data)");
    }
    gp.alpha_ = gp.chol_.solve(targets);
    return gp;
}

GpPrediction LinearGP::predict(const Eigen::VectorXd& query) const {
    if (query.size() != inputs_.cols()) {
        throw NumericalError("gp_predict: query dimension " + std::to_string(query.size()) +
                             " != " + std::to_string(inputs_.cols()));
    }
    const Eigen::VectorXd k = prior_variance_ * (inputs_ * query);
    const double prior = prior_variance_ * query.squaredNorm();
    const double reduction = k.dot(chol_.solve(k));
    GpPrediction out;
    out.mean = k.dot(alpha_);
    // The epistemic part is nonnegative in exact arithmetic; clamp the
    // numerical residue so the reported variance keeps the noise floor.
    out.variance = noise_variance_ + std::max(0.0, prior - reduction);
    return out;
}

}  // namespace moluq::shallow
