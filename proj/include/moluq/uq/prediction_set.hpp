#pragma once

#include <string>
#include <vector>

namespace moluq::uq {

// Whether U(x) is meant as a variance or only as a relative ordering (the
// two distance estimators).
enum class UqSemantics { VarianceLike, Relative };

// Aligned per-molecule outputs of one estimator on one split.
struct PredictionSet {
    std::vector<std::string> smiles;
    std::vector<double> predictions;    // M(x)
    std::vector<double> uncertainties;  // U(x), >= 0 after the replacement rule
    std::vector<double> truths;
    std::string estimator_id;
    std::string split_id;
    UqSemantics semantics = UqSemantics::VarianceLike;

    std::size_t size() const { return predictions.size(); }
    double abs_error(std::size_t i) const;

    // Throws unless vectors are aligned, uncertainties are nonnegative, and
    // every value is finite.
    void validate() const;

    // CSV interface: header `smiles,prediction,uncertainty,truth`.
    std::string to_csv() const;
    static PredictionSet from_csv(const std::string& text);
};

// Eq-style ensemble aggregation: arithmetic mean and population variance
// (divide by n) of the member outputs.
struct EnsembleStats {
    double mean = 0.0;
    double variance = 0.0;
};

EnsembleStats ensemble_predict(const std::vector<double>& member_outputs);

}  // namespace moluq::uq
