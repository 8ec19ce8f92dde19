#include "moluq/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moluq/common/error.hpp"
#include "moluq/common/format.hpp"

namespace moluq::eval {

namespace {

constexpr double kHalfLn2Pi = 0.91893853320467274178;

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

// Average ranks (1-based), ties sharing the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t at = 0;
    while (at < n) {
        std::size_t stop = at + 1;
        while (stop < n && v[idx[stop]] == v[idx[at]]) ++stop;
        const double rank = 0.5 * static_cast<double>(at + 1 + stop);  // mean of at+1..stop
        for (std::size_t i = at; i < stop; ++i) ranks[idx[i]] = rank;
        at = stop;
    }
    return ranks;
}

double nll_with(const uq::PredictionSet& ps, double a, double b, int* clamped) {
    double total = 0.0;
    int clamp_count = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        double u = a * ps.uncertainties[i] + b;
        if (u < kCalibrationFloor) {
            u = kCalibrationFloor;
            ++clamp_count;
        }
        const double err = ps.predictions[i] - ps.truths[i];
        total += kHalfLn2Pi + 0.5 * std::log(u) + err * err / (2.0 * u);
    }
    if (clamped != nullptr) *clamped = clamp_count;
    return total / static_cast<double>(ps.size());
}

// Objective for the calibration search: +inf outside the feasible region.
double calibration_objective(const uq::PredictionSet& ps, double a, double b) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (a * ps.uncertainties[i] + b < kCalibrationFloor) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return nll_with(ps, a, b, nullptr);
}

struct Point2 {
    double a = 0.0;
    double b = 0.0;
    double value = std::numeric_limits<double>::infinity();
};

// Standard Nelder-Mead on (a, b).
Point2 nelder_mead(const uq::PredictionSet& ps, Point2 start, double scale_a, double scale_b) {
    auto eval = [&ps](double a, double b) {
        return Point2{a, b, calibration_objective(ps, a, b)};
    };
    std::array<Point2, 3> simplex = {
        eval(start.a, start.b),
        eval(start.a + scale_a, start.b),
        eval(start.a, start.b + scale_b),
    };
    for (int iter = 0; iter < 300; ++iter) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Point2& x, const Point2& y) { return x.value < y.value; });
        if (std::isfinite(simplex[2].value) &&
            simplex[2].value - simplex[0].value < 1e-13 * (1.0 + std::abs(simplex[0].value))) {
            break;
        }
        const double ca = 0.5 * (simplex[0].a + simplex[1].a);
        const double cb = 0.5 * (simplex[0].b + simplex[1].b);
        const Point2& worst = simplex[2];
        const Point2 reflect = eval(ca + (ca - worst.a), cb + (cb - worst.b));
        if (reflect.value < simplex[0].value) {
            const Point2 expand = eval(ca + 2.0 * (ca - worst.a), cb + 2.0 * (cb - worst.b));
            simplex[2] = expand.value < reflect.value ? expand : reflect;
        } else if (reflect.value < simplex[1].value) {
            simplex[2] = reflect;
        } else {
            const Point2 contract = eval(ca + 0.5 * (worst.a - ca), cb + 0.5 * (worst.b - cb));
            if (contract.value < worst.value) {
                simplex[2] = contract;
            } else {
                // Shrink toward the best vertex.
                for (int i = 1; i < 3; ++i) {
                    simplex[i] = eval(0.5 * (simplex[0].a + simplex[i].a),
                                      0.5 * (simplex[0].b + simplex[i].b));
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const Point2& x, const Point2& y) { return x.value < y.value; });
    return simplex[0];
}

}  // namespace

double gaussian_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw NumericalError("gaussian_quantile: p must be in (0,1)");
    // Acklam's rational estimate.
    static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
            (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    }
    // Two Newton refinements on the CDF.
    for (int i = 0; i < 2; ++i) {
        const double err = std_normal_cdf(x) - p;
        x -= err / std_normal_pdf(x);
    }
    return x;
}

SpearmanResult spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("spearman_rho: length mismatch");
    if (a.size() < 3) throw Error("spearman_rho: need at least 3 points");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - mean_a) * (rb[i] - mean_b);
        var_a += (ra[i] - mean_a) * (ra[i] - mean_a);
        var_b += (rb[i] - mean_b) * (rb[i] - mean_b);
    }
    SpearmanResult out;
    if (var_a <= 0.0 || var_b <= 0.0) {
        out.defined = false;
        out.rho = std::numeric_limits<double>::quiet_NaN();
        out.reason = "zero rank variance (constant input)";
        return out;
    }
    out.rho = cov / std::sqrt(var_a * var_b);
    return out;
}

double coverage_fraction(const uq::PredictionSet& ps, double z) {
    if (ps.size() == 0) throw Error("coverage_fraction: empty set");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps.abs_error(i) <= z * std::sqrt(ps.uncertainties[i])) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(ps.size());
}

double miscalibration_area(const uq::PredictionSet& ps) {
    if (ps.size() == 0) throw Error("miscalibration_area: empty set");
    constexpr int kLevels = 99;
    std::array<double, kLevels> gap;
    for (int i = 0; i < kLevels; ++i) {
        const double p = 0.01 * (i + 1);
        const double z = gaussian_quantile(0.5 * (1.0 + p));  // two-sided interval
        gap[i] = std::abs(coverage_fraction(ps, z) - p);
    }
    double area = 0.0;
    for (int i = 0; i + 1 < kLevels; ++i) area += 0.5 * (gap[i] + gap[i + 1]) * 0.01;
    return area / 0.98;  // normalized by grid width; max is exactly 0.5
}

double nll(const uq::PredictionSet& ps) {
    if (ps.size() == 0) throw Error("nll: empty set");
    for (double u : ps.uncertainties) {
        if (!(u > 0.0)) throw NumericalError("nll: uncertainty <= 0 in " + ps.estimator_id);
    }
    return nll_with(ps, 1.0, 0.0, nullptr);
}

double ideal_nll(const uq::PredictionSet& ps) {
    if (ps.size() == 0) throw Error("ideal_nll: empty set");
    double total = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double err = ps.predictions[i] - ps.truths[i];
        const double r2 = std::max(err * err, kIdealResidualClamp);
        total += kHalfLn2Pi + 0.5 * std::log(r2) + 0.5;
    }
    return total / static_cast<double>(ps.size());
}

CalibrationParams fit_calibration(const uq::PredictionSet& validation) {
    if (validation.size() < 10) {
        throw Error("fit_calibration: need at least 10 validation points");
    }
    double var_r = 0.0, mean_r = 0.0, mean_u = 0.0, min_u = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < validation.size(); ++i) {
        const double err = validation.predictions[i] - validation.truths[i];
        mean_r += err;
        mean_u += validation.uncertainties[i];
        min_u = std::min(min_u, validation.uncertainties[i]);
    }
    mean_r /= static_cast<double>(validation.size());
    mean_u /= static_cast<double>(validation.size());
    for (std::size_t i = 0; i < validation.size(); ++i) {
        const double err = validation.predictions[i] - validation.truths[i];
        var_r += (err - mean_r) * (err - mean_r);
    }
    var_r = std::max(var_r / static_cast<double>(validation.size()), 1e-10);

    // Five starts; any start below the feasibility floor gets its offset
    // lifted just past it.
    const double ratio = mean_u > 0.0 ? var_r / mean_u : 1.0;
    std::array<Point2, 5> starts = {{{1.0, 0.0, 0.0},
                                     {0.0, var_r, 0.0},
                                     {ratio, 0.0, 0.0},
                                     {0.5, 0.5 * var_r, 0.0},
                                     {2.0, 0.1 * var_r, 0.0}}};
    Point2 best;
    for (Point2 s : starts) {
        const double floor_b = kCalibrationFloor - s.a * min_u;
        if (s.b < floor_b) s.b = floor_b + 1e-12 + 1e-6 * var_r;
        s.value = calibration_objective(validation, s.a, s.b);
        if (s.value < best.value) best = s;
        const Point2 refined =
            nelder_mead(validation, s, std::max(0.25 * std::abs(s.a), 0.05),
                        std::max(0.25 * std::abs(s.b), 0.05 * var_r));
        if (refined.value < best.value) best = refined;
    }
    if (!std::isfinite(best.value)) {
        throw NumericalError("fit_calibration: no feasible start found");
    }
    return CalibrationParams{best.a, best.b, best.value};
}

double cnll(const uq::PredictionSet& test, const CalibrationParams& params,
            int* clamped_points) {
    if (test.size() == 0) throw Error("cnll: empty set");
    return nll_with(test, params.a, params.b, clamped_points);
}

std::array<double, 5> rmse_retention_curve(const uq::PredictionSet& ps) {
    const std::size_t n = ps.size();
    if (n == 0) throw Error("rmse_retention_curve: empty set");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&ps](std::size_t a, std::size_t b) {
        return ps.uncertainties[a] < ps.uncertainties[b];
    });
    std::array<double, 5> out{};
    for (std::size_t level = 0; level < kRetentionFractions.size(); ++level) {
        const std::size_t count = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(kRetentionFractions[level] * static_cast<double>(n))));
        double sse = 0.0;
        for (std::size_t i = 0; i < count && i < n; ++i) {
            const double err = ps.abs_error(idx[i]);
            sse += err * err;
        }
        out[level] = std::sqrt(sse / static_cast<double>(std::min(count, n)));
    }
    return out;
}

double MetricReport::capped_slope() const {
    return std::clamp(calibration_a, 0.0, 10.0);
}

MetricReport evaluate_cell(const uq::PredictionSet& test, const uq::PredictionSet& validation,
                           const std::string& dataset) {
    test.validate();
    validation.validate();

    MetricReport r;
    r.estimator_id = test.estimator_id;
    r.dataset = dataset;
    r.split_id = test.split_id;
    r.semantics = test.semantics;

    std::vector<double> errors(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) errors[i] = test.abs_error(i);
    const SpearmanResult rho = spearman_rho(test.uncertainties, errors);
    r.spearman = rho.rho;
    r.spearman_defined = rho.defined;
    r.spearman_reason = rho.reason;

    r.ideal = ideal_nll(test);
    if (test.semantics == uq::UqSemantics::VarianceLike) {
        r.area = miscalibration_area(test);
        const bool all_positive =
            std::all_of(test.uncertainties.begin(), test.uncertainties.end(),
                        [](double u) { return u > 0.0; });
        if (all_positive) {
            r.nll_value = nll(test);
            r.nll_difference = *r.nll_value - r.ideal;
        }
    }

    const CalibrationParams params = fit_calibration(validation);
    r.calibration_a = params.a;
    r.calibration_b = params.b;
    r.calibration_validation_nll = params.validation_nll;
    r.cnll_value = cnll(test, params, &r.cnll_clamped_points);
    r.cnll_difference = r.cnll_value - r.ideal;

    r.retention_rmse = rmse_retention_curve(test);
    return r;
}

namespace {

void put_optional(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    if (v.has_value()) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

std::optional<double> get_optional(const nlohmann::json& j, const char* key) {
    if (j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["estimator"] = estimator_id;
    j["dataset"] = dataset;
    j["split"] = split_id;
    j["semantics"] = semantics == uq::UqSemantics::Relative ? "relative" : "variance";
    if (spearman_defined) {
        j["spearman"] = spearman;
    } else {
        j["spearman"] = nullptr;
        j["spearman_reason"] = spearman_reason;
    }
    put_optional(j, "area", area);
    put_optional(j, "nll", nll_value);
    put_optional(j, "nll_difference", nll_difference);
    j["ideal_nll"] = ideal;
    j["cnll"] = cnll_value;
    j["cnll_difference"] = cnll_difference;
    j["calibration_a"] = calibration_a;
    j["calibration_b"] = calibration_b;
    j["calibration_validation_nll"] = calibration_validation_nll;
    j["cnll_clamped_points"] = cnll_clamped_points;
    j["retention_rmse"] = retention_rmse;
    return j.dump(2) + "\n";
}

MetricReport MetricReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MetricReport r;
    r.estimator_id = j.at("estimator").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.split_id = j.at("split").get<std::string>();
    r.semantics = j.at("semantics").get<std::string>() == "relative"
                      ? uq::UqSemantics::Relative
                      : uq::UqSemantics::VarianceLike;
    if (j.at("spearman").is_null()) {
        r.spearman_defined = false;
        r.spearman = std::numeric_limits<double>::quiet_NaN();
        r.spearman_reason = j.value("spearman_reason", "");
    } else {
        r.spearman = j.at("spearman").get<double>();
    }
    r.area = get_optional(j, "area");
    r.nll_value = get_optional(j, "nll");
    r.nll_difference = get_optional(j, "nll_difference");
    r.ideal = j.at("ideal_nll").get<double>();
    r.cnll_value = j.at("cnll").get<double>();
    r.cnll_difference = j.at("cnll_difference").get<double>();
    r.calibration_a = j.at("calibration_a").get<double>();
    r.calibration_b = j.at("calibration_b").get<double>();
    r.calibration_validation_nll = j.at("calibration_validation_nll").get<double>();
    r.cnll_clamped_points = j.at("cnll_clamped_points").get<int>();
    const auto ret = j.at("retention_rmse").get<std::vector<double>>();
    std::copy_n(ret.begin(), 5, r.retention_rmse.begin());
    return r;
}

std::string MetricReport::csv_header() {
    return "estimator,dataset,split,semantics,spearman,area,nll,nll_difference,ideal_nll,"
           "cnll,cnll_difference,calibration_a,calibration_b,capped_slope,"
           "rmse_100,rmse_50,rmse_25,rmse_10,rmse_5";
}

std::string MetricReport::csv_row() const {
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) {
        return v.has_value() ? format_double(*v) : std::string();
    };
    out << estimator_id << ',' << dataset << ',' << split_id << ','
        << (semantics == uq::UqSemantics::Relative ? "relative" : "variance") << ','
        << (spearman_defined ? format_double(spearman) : std::string()) << ',' << opt(area)
        << ',' << opt(nll_value) << ',' << opt(nll_difference) << ',' << format_double(ideal)
        << ',' << format_double(cnll_value) << ',' << format_double(cnll_difference) << ','
        << format_double(calibration_a) << ',' << format_double(calibration_b) << ','
        << format_double(capped_slope());
    for (double v : retention_rmse) out << ',' << format_double(v);
    return out.str();
}

}  // namespace moluq::eval
