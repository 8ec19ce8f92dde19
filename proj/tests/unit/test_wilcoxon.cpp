#include <doctest.h>

#include <cmath>
#include <vector>

#include "moluq/common/error.hpp"
#include "moluq/common/rng.hpp"
#include "moluq/stats/wilcoxon.hpp"

using namespace moluq;
using stats::ComparisonCell;
using stats::Direction;
using stats::wsrt_z;

TEST_CASE("all-wins fixture reproduces the hand-derived z scores") {
    // Five pairs, primary higher everywhere: S = 1+2+3+4+5 = 15,
    // centered 15 - 7.5 = 7.5, variance term 5*6*11/24 = 13.75.
    const std::vector<double> primary = {1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> secondary = {0.5, 1.0, 2.5, 3.0, 4.8};
    const ComparisonCell cell = wsrt_z(primary, secondary, Direction::HigherBetter);
    CHECK(cell.n == 5);
    CHECK(cell.rank_sum == 15.0);
    CHECK(cell.z == doctest::Approx(7.5 / 13.75).epsilon(1e-12));        // ~0.545
    CHECK(cell.z_sqrt == doctest::Approx(7.5 / std::sqrt(13.75)).epsilon(1e-12));  // ~2.023
    CHECK(cell.z == doctest::Approx(0.545).epsilon(1e-3));
    CHECK(cell.z_sqrt == doctest::Approx(2.023).epsilon(1e-3));
}

TEST_CASE("identical score vectors leave the cell undefined") {
    const std::vector<double> s = {1.0, 2.0, 3.0};
    const ComparisonCell cell = wsrt_z(s, s, Direction::HigherBetter);
    CHECK(!cell.defined);
    CHECK(cell.n == 0);
}

TEST_CASE("zero differences are dropped with n decremented") {
    const std::vector<double> primary = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> secondary = {1.0, 1.0, 4.0, 2.0};
    const ComparisonCell cell = wsrt_z(primary, secondary, Direction::HigherBetter);
    CHECK(cell.n == 3);  // the tied first pair is gone
}

TEST_CASE("swapping primary and secondary negates both z variants") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(12);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        const auto ab = wsrt_z(a, b, Direction::HigherBetter);
        const auto ba = wsrt_z(b, a, Direction::HigherBetter);
        if (!ab.defined) continue;
        CHECK(ab.z == doctest::Approx(-ba.z).epsilon(1e-12));
        CHECK(ab.z_sqrt == doctest::Approx(-ba.z_sqrt).epsilon(1e-12));
        // The two variants always share sign.
        CHECK(ab.z * ab.z_sqrt >= 0.0);
    }
}

TEST_CASE("direction flips which side counts as a win") {
    const std::vector<double> primary = {1.0, 2.0};
    const std::vector<double> secondary = {2.0, 3.0};
    const auto higher = wsrt_z(primary, secondary, Direction::HigherBetter);
    const auto lower = wsrt_z(primary, secondary, Direction::LowerBetter);
    CHECK(higher.z < 0.0);
    CHECK(lower.z > 0.0);
    CHECK(higher.z == doctest::Approx(-lower.z).epsilon(1e-12));
}

TEST_CASE("z is invariant under shared shifts and positive scalings") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.uniform_index(8);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        const auto base = wsrt_z(a, b, Direction::HigherBetter);
        if (!base.defined) continue;

        std::vector<double> a_shift(n), b_shift(n), a_scale(n), b_scale(n);
        const double shift = rng.normal(0.0, 5.0);
        const double scale = 0.1 + 4.0 * rng.uniform();
        for (std::size_t i = 0; i < n; ++i) {
            a_shift[i] = a[i] + shift;
            b_shift[i] = b[i] + shift;
            a_scale[i] = a[i] * scale;
            b_scale[i] = b[i] * scale;
        }
        CHECK(wsrt_z(a_shift, b_shift, Direction::HigherBetter).z ==
              doctest::Approx(base.z).epsilon(1e-12));
        CHECK(wsrt_z(a_scale, b_scale, Direction::HigherBetter).z ==
              doctest::Approx(base.z).epsilon(1e-12));
    }
}

TEST_CASE("comparison matrix is antisymmetric with an undefined diagonal") {
    Rng rng(31);
    const std::vector<std::string> ids = {"alpha", "beta", "gamma"};
    std::vector<std::vector<double>> scores(3);
    for (auto& row : scores) {
        for (int i = 0; i < 10; ++i) row.push_back(rng.normal());
    }
    const auto m = stats::comparison_matrix(ids, scores, "spearman", Direction::HigherBetter);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(!m.cells[i][i].defined);
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            CHECK(m.cells[i][j].z == doctest::Approx(-m.cells[j][i].z).epsilon(1e-12));
        }
    }

    const auto csv = m.to_csv();
    CHECK(csv.find("alpha") != std::string::npos);
    const auto heatmap = m.to_heatmap_json();
    CHECK(heatmap.find("\"z\"") != std::string::npos);
}

TEST_CASE("a dominant estimator gets positive z against every other") {
    std::vector<std::vector<double>> scores = {
        {0.9, 0.8, 0.95, 0.85},   // consistently best
        {0.5, 0.6, 0.55, 0.50},
        {0.1, 0.3, 0.20, 0.25},
    };
    const auto m = stats::comparison_matrix({"top", "mid", "low"}, scores, "spearman",
                                            Direction::HigherBetter);
    CHECK(m.cells[0][1].z > 0.0);
    CHECK(m.cells[0][2].z > 0.0);
    CHECK(m.cells[1][0].z < 0.0);
    CHECK(m.cells[1][2].z > 0.0);
}

TEST_CASE("missing scores are reported by estimator id") {
    std::vector<std::vector<double>> scores = {
        {0.9, 0.8},
        {0.5, std::numeric_limits<double>::quiet_NaN()},
    };
    try {
        stats::comparison_matrix({"ok", "holey"}, scores, "nll", Direction::LowerBetter);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("holey") != std::string::npos);
    }
}

TEST_CASE("wsrt error paths") {
    CHECK_THROWS_AS(wsrt_z({1.0}, {2.0}, Direction::HigherBetter), Error);
    CHECK_THROWS_AS(wsrt_z({1.0, 2.0}, {2.0}, Direction::HigherBetter), Error);
    CHECK_THROWS_AS(
        wsrt_z({1.0, std::numeric_limits<double>::quiet_NaN()}, {2.0, 1.0},
               Direction::HigherBetter),
        Error);
}
