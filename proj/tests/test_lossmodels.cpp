#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "lossy/lossmodels.hpp"

using namespace lossy;

namespace {

const std::string kCases = std::string(LOSSY_SOURCE_DIR) + "/cases/";

std::vector<double> grid(double lo, double hi, int n = 1000) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
    return x;
}

double sse(const QuadraticLoss& q, double alpha, double beta, double lo, double hi) {
    double s = 0;
    for (int i = 0; i <= 1000; ++i) {
        const double f = lo + (hi - lo) * i / 1000.0;
        const double e = alpha * f + beta - q(f);
        s += e * e;
    }
    return s;
}

LossModel hvdc_pwl_12() {
    return LossModel::from_coefficients("1-2", LossKind::Piecewise,
                                        {{0.0188, 0.0095}, {0.0403, -0.0048}, {0.0618, -0.0335}}, 2.0);
}

}  // namespace

TEST_CASE("quadratic evaluation") {
    const QuadraticLoss q{0.05, 0.01, 0.001};
    CHECK(q(0.0) == doctest::Approx(0.001));
    CHECK(q(1.2) == doctest::Approx(0.05 * 1.44 + 0.012 + 0.001));
    CHECK(q(1.2) == doctest::Approx(0.085));
    CHECK(q(-0.7) == q(0.7));
    CHECK(QuadraticLoss::resistive(0.02)(3.0) == doctest::Approx(0.18));
}

TEST_CASE("constant fit") {
    const QuadraticLoss q{0.05, 0.01, 0.001};
    auto m = fit_constant(q, 0.0, 2.0);
    CHECK(m.segments.size() == 1);
    CHECK(m.segments[0].alpha == 0.0);
    CHECK(m.segments[0].beta == doctest::Approx(0.001));
    CHECK(fit_constant(q, 1.2, 2.0).segments[0].beta == doctest::Approx(0.085));
    CHECK_THROWS_AS(fit_constant(q, 3.0, 2.0), FitError);
    // Published constant factors are input data; they must be valid models.
    validate(LossModel::from_coefficients("1-2", LossKind::Constant, {{0.0, 0.0348}}, 2.0));
}

TEST_CASE("linear fits") {
    const QuadraticLoss q{0.05, 0.01, 0.001};
    SUBCASE("two point") {
        const auto m = fit_linear(q, TwoPoint{0.0, 1.2}, 2.0);
        // Line through (0, 0.001) and (1.2, 0.085).
        CHECK(m.segments[0].alpha == doctest::Approx((0.085 - 0.001) / 1.2));
        CHECK(m.segments[0].alpha == doctest::Approx(0.07));
        CHECK(m.segments[0].beta == doctest::Approx(0.001));
        CHECK_THROWS_AS(fit_linear(q, TwoPoint{0.5, 0.5}, 2.0), FitError);
    }
    SUBCASE("tangent") {
        const auto m = fit_linear({1.0, 0.0, 0.0}, Tangent{0.5}, 2.0);
        CHECK(m.segments[0].alpha == doctest::Approx(1.0));
        CHECK(m.segments[0].beta == doctest::Approx(-0.25));
    }
    SUBCASE("least squares reproduces a linear target") {
        const auto m = fit_linear({0.0, 0.03, 0.002}, LeastSquares{0.0, 2.0}, 2.0);
        CHECK(m.segments[0].alpha == doctest::Approx(0.03).epsilon(1e-12));
        CHECK(m.segments[0].beta == doctest::Approx(0.002).epsilon(1e-12));
    }
    SUBCASE("least squares is locally optimal") {
        const auto m = fit_linear(q, LeastSquares{0.0, 2.0}, 2.0);
        const double best = sse(q, m.segments[0].alpha, m.segments[0].beta, 0, 2);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-1e-3, 1e-3);
        for (int i = 0; i < 100; ++i)
            CHECK(sse(q, m.segments[0].alpha + u(rng), m.segments[0].beta + u(rng), 0, 2) >= best);
    }
}

TEST_CASE("piecewise fits") {
    SUBCASE("single segment equals the linear fit") {
        const QuadraticLoss q{0.05, 0.01, 0.001};
        const auto a = fit_piecewise(q, 2.0, 1, SegmentFit::Chord);
        const auto b = fit_linear(q, TwoPoint{0.0, 2.0}, 2.0);
        CHECK(a.segments[0].alpha == doctest::Approx(b.segments[0].alpha));
        CHECK(a.segments[0].beta == doctest::Approx(b.segments[0].beta));
        const auto c = fit_piecewise(q, 2.0, 1, SegmentFit::LeastSquares);
        const auto d = fit_linear(q, LeastSquares{0.0, 2.0}, 2.0);
        CHECK(c.segments[0].alpha == doctest::Approx(d.segments[0].alpha));
    }
    SUBCASE("chords of x^2 on two segments") {
        const auto m = fit_piecewise({1.0, 0.0, 0.0}, 2.0, 2, SegmentFit::Chord);
        REQUIRE(m.segments.size() == 2);
        CHECK(m.segments[0].alpha == doctest::Approx(1.0));
        CHECK(m.segments[0].beta == doctest::Approx(0.0));
        CHECK(m.segments[1].alpha == doctest::Approx(3.0));
        CHECK(m.segments[1].beta == doctest::Approx(-2.0));
        CHECK(m.eval(0.0) == doctest::Approx(0.0));
        CHECK(m.eval(1.0) == doctest::Approx(1.0));
        CHECK(m.eval(2.0) == doctest::Approx(4.0));
        CHECK(m.segments[0].f_star == doctest::Approx(1.0));
        CHECK(m.capacity() == 2.0);
    }
    SUBCASE("segment length") {
        const auto m = fit_piecewise_by_length({0.025, 0.016, 0.004}, 2.0, 0.6, SegmentFit::LeastSquares);
        CHECK(m.segments.size() == 4);
        CHECK(m.capacity() == 2.0);
        validate(m);
    }
    SUBCASE("bundled piecewise factors satisfy the invariants") {
        const auto m = hvdc_pwl_12();
        validate(m);
        CHECK(m.segments[0].f_star == doctest::Approx(0.66512).epsilon(1e-4));
        CHECK(m.segments[1].f_star == doctest::Approx(1.33488).epsilon(1e-4));
        const auto m23 = LossModel::from_coefficients(
            "2-3", LossKind::Piecewise, {{0.0171, 0.0100}, {0.0373, -0.0036}, {0.0576, -0.0306}}, 2.0);
        validate(m23);
        // The cleared flow 0.936 p.u. lies on the middle segment of line 2-3.
        CHECK(m23.segment_at(0.936) == 1);
    }
    SUBCASE("ties resolve to the lower segment") {
        const auto m = fit_piecewise({1.0, 0.0, 0.0}, 2.0, 2, SegmentFit::Chord);
        CHECK(m.segment_at(1.0) == 0);
        CHECK(m.segment_at(-1.0) == 0);
        CHECK(m.segment_at(1.0 + 1e-9) == 1);
    }
}

TEST_CASE("chords overestimate and tangents underestimate") {
    const QuadraticLoss q{0.025, 0.016, 0.004};
    for (std::size_t k : {1, 3, 5, 10}) {
        const auto chord = fit_piecewise(q, 2.0, k, SegmentFit::Chord);
        const auto tangent = fit_piecewise(q, 2.0, k, SegmentFit::Tangent);
        double chord_min = INFINITY, tangent_max = -INFINITY;
        for (double f : grid(0, 2)) {
            chord_min = std::min(chord_min, chord.eval(f) - q(f));
            tangent_max = std::max(tangent_max, tangent.eval(f) - q(f));
        }
        CHECK(chord_min >= -1e-12);
        CHECK(tangent_max <= 1e-12);
    }
}

TEST_CASE("convexity repair") {
    // A concave target has no convex representation; even the chord fallback fails.
    CHECK_THROWS_AS(fit_piecewise({-0.01, 0.05, 0.0}, 2.0, 3, SegmentFit::Tangent), FitError);
    const auto merged = fit_piecewise({0.0, 0.02, 0.001}, 2.0, 4, SegmentFit::LeastSquares);
    CHECK(merged.segments.size() == 1);
    CHECK_FALSE(merged.repaired);
}

TEST_CASE("epigraph rows") {
    SUBCASE("constant model gives one row") {
        const auto rows = epigraph_constraints(fit_constant({0.05, 0.01, 0.001}, 1.0, 2.0, "L"));
        CHECK(rows.size() == 1);
    }
    SUBCASE("linear model gives two rows") {
        const auto rows = epigraph_constraints(fit_linear({0.05, 0.01, 0.001}, TwoPoint{0, 2}, 2.0, "L"));
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].dual_label == "sigma+[1,L]");
        CHECK(rows[1].dual_label == "sigma-[1,L]");
    }
    SUBCASE("bundled piecewise factors: pointwise max equals the model") {
        const auto m = hvdc_pwl_12();
        const auto rows = epigraph_constraints(m);
        CHECK(rows.size() == 6);
        for (double f : grid(-2, 2)) {
            double mx = -INFINITY;
            for (const auto& r : rows) mx = std::max(mx, r.sign * r.alpha * f + r.beta);
            CHECK(std::abs(mx - m.eval(f)) <= 1e-12);
            CHECK(m.eval(f) == m.eval(-f));
        }
    }
    SUBCASE("fitted piecewise: pointwise max equals the model") {
        const auto m = fit_piecewise({0.025, 0.016, 0.004}, 2.0, 10, SegmentFit::LeastSquares, "H");
        for (double f : grid(-2, 2)) CHECK(std::abs(m.epigraph_value(f) - m.eval(f)) <= 1e-12);
    }
}

TEST_CASE("distribution matrices") {
    const auto net = load_case_file(kCases + "ex1_3bus.json");
    const auto d = distribution_matrices(net);
    CHECK(d.d_dc(0, 0) == 0.5);
    CHECK(d.d_dc(1, 0) == 0.5);
    CHECK(d.d_dc(2, 0) == 0.0);
    CHECK(d.d_ac.colwise().sum().isOnes());
    const auto big = load_case_file(kCases + "rts4_96bus.json");
    const auto db = distribution_matrices(big);
    CHECK((db.d_ac.array() != 0.0).count() == 2 * 156);
    CHECK(db.d_ac.colwise().sum().isOnes());
    CHECK(db.d_dc.colwise().sum().isOnes());
}

TEST_CASE("loss table CSV round trip") {
    LossTable t;
    t["1-2"] = hvdc_pwl_12();
    t["2-3"] = fit_linear({0.01515, 0.007, 0.01}, LeastSquares{0, 2}, 2.0, "2-3");
    t["c"] = fit_constant({0.01, 0, 0.001}, 1.0, 2.0, "c");
    const auto back = loss_table_from_csv(loss_table_to_csv(t));
    REQUIRE(back.size() == 3);
    for (const auto& [id, m] : t) {
        const auto& b = back.at(id);
        CHECK(b.kind == m.kind);
        REQUIRE(b.segments.size() == m.segments.size());
        for (std::size_t k = 0; k < m.segments.size(); ++k) {
            CHECK(b.segments[k].alpha == m.segments[k].alpha);
            CHECK(b.segments[k].beta == m.segments[k].beta);
            CHECK(b.segments[k].f_star == m.segments[k].f_star);
        }
    }
    CHECK_THROWS(loss_table_from_csv("nope\n"));
}

TEST_CASE("bundled loss-factor tables load") {
    for (const char* kind : {"constant", "linear", "pwl"}) {
        std::ifstream in(kCases + "hvdc_factors_" + kind + ".csv");
        std::stringstream ss;
        ss << in.rdbuf();
        const auto t = loss_table_from_csv(ss.str());
        CHECK(t.size() == 2);
        CHECK(to_string(t.at("1-2").kind) == std::string(kind));
    }
}
