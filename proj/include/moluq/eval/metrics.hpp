#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "moluq/uq/prediction_set.hpp"

namespace moluq::eval {

// Inverse standard normal CDF, accurate to ~1e-14 (rational estimate plus
// Newton refinement on erf).
double gaussian_quantile(double p);

struct SpearmanResult {
    double rho = 0.0;
    bool defined = true;
    std::string reason;  // set when undefined (zero rank variance)
};

// Rank correlation with average ranks for ties. Inputs of length < 3 or with
// constant ranks are undefined and reported with a reason, not thrown.
SpearmanResult spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

// Fraction of points whose |error| falls within z standard deviations under
// U(x) as the variance. U = 0 with a nonzero error counts as outside.
double coverage_fraction(const uq::PredictionSet& ps, double z);

// Trapezoidal integral of |observed - expected| coverage over the 99-level
// grid p = 0.01..0.99, normalized by the grid width so the vanishing-U
// worst case scores exactly 0.5. Always in [0, 0.5].
double miscalibration_area(const uq::PredictionSet& ps);

// Mean over the set of 0.5 [ln 2 pi + ln U + err^2 / U]. Throws when any
// U <= 0.
double nll(const uq::PredictionSet& ps);

// NLL of the per-point optimal variance U = err^2, with err^2 clamped at
// 1e-12 so exact zero residuals stay finite.
double ideal_nll(const uq::PredictionSet& ps);

inline constexpr double kIdealResidualClamp = 1e-12;
inline constexpr double kCalibrationFloor = 1e-8;

struct CalibrationParams {
    double a = 1.0;
    double b = 0.0;
    double validation_nll = 0.0;  // achieved on the calibration set
};

// Multi-start Nelder-Mead over (a, b) minimizing the validation NLL of
// a U + b, subject to a U(x) + b >= kCalibrationFloor on the calibration
// set. The start list includes (1, 0) and (0, var(residuals)); the result
// is never worse than the best start.
CalibrationParams fit_calibration(const uq::PredictionSet& validation);

// NLL under a* U + b*; values below the floor are clamped (count reported
// through `clamped_points` when given).
double cnll(const uq::PredictionSet& test, const CalibrationParams& params,
            int* clamped_points = nullptr);

inline constexpr std::array<double, 5> kRetentionFractions = {1.0, 0.5, 0.25, 0.10, 0.05};

// RMSE over the lowest-uncertainty fraction of the set, for each retention
// level; ties in U keep input order (stable sort).
std::array<double, 5> rmse_retention_curve(const uq::PredictionSet& ps);

// One evaluation cell: everything the comparison pipeline consumes.
// Quantitative metrics (area, NLL, NLL difference) are absent for
// relative-semantics estimators; cNLL covers those instead.
struct MetricReport {
    std::string estimator_id;
    std::string dataset;
    std::string split_id;
    uq::UqSemantics semantics = uq::UqSemantics::VarianceLike;

    double spearman = 0.0;
    bool spearman_defined = true;
    std::string spearman_reason;

    std::optional<double> area;
    std::optional<double> nll_value;
    std::optional<double> nll_difference;
    double ideal = 0.0;

    double cnll_value = 0.0;
    double cnll_difference = 0.0;
    double calibration_a = 1.0;
    double calibration_b = 0.0;
    double calibration_validation_nll = 0.0;
    int cnll_clamped_points = 0;

    std::array<double, 5> retention_rmse = {};

    // a* capped to [0, 10] for the slope histogram outputs.
    double capped_slope() const;

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
    static std::string csv_header();
    std::string csv_row() const;
};

// Scores a test set, calibrating on the matching validation set.
MetricReport evaluate_cell(const uq::PredictionSet& test, const uq::PredictionSet& validation,
                           const std::string& dataset);

}  // namespace moluq::eval
