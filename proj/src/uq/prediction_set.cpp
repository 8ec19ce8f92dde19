#include "moluq/uq/prediction_set.hpp"

#include <cmath>
#include <sstream>

#include "moluq/common/error.hpp"
#include "moluq/common/format.hpp"

namespace moluq::uq {

double PredictionSet::abs_error(std::size_t i) const {
    return std::abs(predictions[i] - truths[i]);
}

void PredictionSet::validate() const {
    const std::size_t n = predictions.size();
    if (uncertainties.size() != n || truths.size() != n ||
        (!smiles.empty() && smiles.size() != n)) {
        throw Error("PredictionSet: misaligned vectors for " + estimator_id);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(predictions[i]) || !std::isfinite(uncertainties[i]) ||
            !std::isfinite(truths[i])) {
            throw Error("PredictionSet: non-finite value at row " + std::to_string(i) +
                        " for " + estimator_id);
        }
        if (uncertainties[i] < 0.0) {
            throw Error("PredictionSet: negative uncertainty at row " + std::to_string(i) +
                        " for " + estimator_id);
        }
    }
}

std::string PredictionSet::to_csv() const {
    std::ostringstream out;
    out << "smiles,prediction,uncertainty,truth\n";
    for (std::size_t i = 0; i < size(); ++i) {
        out << (i < smiles.size() ? smiles[i] : "") << ',' << format_double(predictions[i])
            << ',' << format_double(uncertainties[i]) << ',' << format_double(truths[i])
            << '\n';
    }
    return out.str();
}

PredictionSet PredictionSet::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "smiles,prediction,uncertainty,truth") {
        throw Error("PredictionSet::from_csv: bad header");
    }
    PredictionSet ps;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string smiles, p, u, t;
        std::getline(row, smiles, ',');
        std::getline(row, p, ',');
        std::getline(row, u, ',');
        std::getline(row, t, ',');
        ps.smiles.push_back(smiles);
        ps.predictions.push_back(std::stod(p));
        ps.uncertainties.push_back(std::stod(u));
        ps.truths.push_back(std::stod(t));
    }
    return ps;
}

EnsembleStats ensemble_predict(const std::vector<double>& member_outputs) {
    if (member_outputs.empty()) throw Error("ensemble_predict: no member outputs");
    EnsembleStats s;
    const double n = static_cast<double>(member_outputs.size());
    for (double v : member_outputs) s.mean += v;
    s.mean /= n;
    for (double v : member_outputs) s.variance += (s.mean - v) * (s.mean - v);
    s.variance /= n;
    return s;
}

}  // namespace moluq::uq
