#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "lossy/calibration.hpp"

using namespace lossy;

namespace {

const std::string kCases = std::string(LOSSY_SOURCE_DIR) + "/cases/";

// Generator and load at both ends so either zone can export.
Network two_zone_line(double r, double x) {
    return Network::build("pair", 100, 230, {{"1", "A", true}, {"2", "B", false}},
                          {{"L", "1", "2", 1.0 / x, r, 0.0, 5.0}}, {},
                          {{"G1", "1", 10, 0, 2.0}, {"G2", "2", 20, 0, 1.5}},
                          {{"D1", "1", 100, 0, 2.0}, {"D2", "2", 100, 0, 2.0}});
}

// Both ends held at 1.0 p.u.: the receiving angle solves
// g(1 - cos d) - b sin d = -P with y = g + jb, and the loss is 2g(1 - cos d).
double equal_voltage_loss(double r, double x, double p_received) {
    const std::complex<double> y = 1.0 / std::complex<double>(r, x);
    const double g = y.real(), b = y.imag();
    double d = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double f = g * (1 - std::cos(d)) - b * std::sin(d) + p_received;
        const double df = g * std::sin(d) - b * std::cos(d);
        d -= f / df;
    }
    return 2.0 * g * (1.0 - std::cos(d));
}

// Three areas in a chain A - B - C, two buses each.
Network chain(double r) {
    std::vector<Bus> buses = {{"a1", "A", true}, {"a2", "A", false}, {"b1", "B", false},
                              {"b2", "B", false}, {"c1", "C", false}, {"c2", "C", false}};
    std::vector<ACLine> lines = {{"a", "a1", "a2", 10, r, 0, 5},   {"ab", "a2", "b1", 8, r, 0, 3},
                                 {"b", "b1", "b2", 10, r, 0, 5},   {"bc", "b2", "c1", 8, r, 0, 3},
                                 {"c", "c1", "c2", 10, r, 0, 5}};
    std::vector<Generator> gens = {{"GA", "a1", 10, 0, 2}, {"GB", "b1", 20, 0, 2}, {"GC", "c2", 30, 0, 2}};
    std::vector<Load> loads = {{"DA", "a2", 100, 0, 2}, {"DB", "b2", 100, 0, 2}, {"DC", "c1", 100, 0, 2}};
    return Network::build("chain", 100, 230, buses, lines, {}, gens, loads);
}

std::vector<LossSample> synthetic(const QuadraticLoss& q, double capacity, std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-capacity, capacity);
    std::vector<LossSample> out(n);
    for (auto& s : out) {
        s.flow = u(rng);
        s.loss = q(s.flow);
        s.line_loss = s.loss;
    }
    return out;
}

double grid_error(const LossModel& m, const QuadraticLoss& q, double capacity) {
    double e = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double f = capacity * i / 2000.0;
        e = std::max(e, std::abs(m.eval(f) - q(f)));
    }
    return e;
}

}  // namespace

TEST_CASE("lossless network: every sample has zero losses") {
    const auto net = two_zone_line(0.0, 0.1);
    const auto pop = interzonal_loss_population(net, zone_map_of(net), "A", "B", 10, 1);
    REQUIRE(pop.samples.size() == 20);
    for (const auto& s : pop.samples) {
        CHECK(std::abs(s.loss) < 1e-12);
        CHECK(s.exchange > 0.0);
    }
}

TEST_CASE("two zones on one line: losses follow the single-line solution") {
    const double r = 0.01, x = 0.1;
    const auto net = two_zone_line(r, x);
    const auto pop = interzonal_loss_population(net, zone_map_of(net), "A", "B", 25, 3);
    REQUIRE(pop.samples.size() == 50);
    CHECK(pop.dropped == 0);
    std::size_t ab = 0;
    for (const auto& s : pop.samples) {
        ab += s.exporter == "A";
        CHECK(s.corridor == "A-B");
        CHECK(s.flow > 0.0);  // oriented exporter -> importer
        CHECK(s.line_loss == doctest::Approx(s.loss).epsilon(1e-12));
        CHECK(s.loss == doctest::Approx(equal_voltage_loss(r, x, s.exchange)).epsilon(1e-8));
        CHECK(s.loss == doctest::Approx(r * s.flow * s.flow).epsilon(0.02));
        CHECK(s.balance_error < 1e-8);
    }
    CHECK(ab == 25);
    // Export levels span [0.2, 1] of the zone's capacity.
    double lo = 1e9, hi = 0;
    for (const auto& s : pop.samples)
        if (s.exporter == "A") lo = std::min(lo, s.exchange), hi = std::max(hi, s.exchange);
    CHECK(lo >= 0.2 * 2.0 - 1e-12);
    CHECK(hi <= 2.0 + 1e-12);
    CHECK(hi - lo > 1.0);
}

TEST_CASE("population preconditions and failures") {
    const auto net = two_zone_line(0.01, 0.1);
    const auto zm = zone_map_of(net);
    CHECK_THROWS_AS(interzonal_loss_population(net, zm, "A", "B", 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(interzonal_loss_population(net, zm, "A", "A", 5, 1), std::invalid_argument);
    CHECK_THROWS(interzonal_loss_population(net, zm, "A", "Z", 5, 1));

    PopulationOptions starved;
    starved.acpf.max_iterations = 1;
    CHECK_THROWS_AS(interzonal_loss_population(net, zm, "A", "B", 5, 1, starved), CalibrationError);

    // Zones joined only by HVDC are not sampled.
    const auto ex1 = load_case_file(kCases + "ex1_3bus.json");
    const auto z1 = zone_map_of(ex1);
    const auto zn = reduce_to_zonal(ex1, z1);
    if (zn.zones.size() >= 2 && zn.corridors.size() < zn.zones.size() * (zn.zones.size() - 1) / 2) {
        bool threw = false;
        for (std::size_t a = 0; a < zn.zones.size(); ++a)
            for (std::size_t b = a + 1; b < zn.zones.size(); ++b) try {
                    interzonal_loss_population(ex1, z1, zn.zones[a], zn.zones[b], 2, 1);
                } catch (const CalibrationError&) {
                    threw = true;
                }
        CHECK(threw);
    }
}

TEST_CASE("populations are reproducible from the seed") {
    const auto net = chain(0.01);
    const auto zm = zone_map_of(net);
    const auto p1 = interzonal_loss_population(net, zm, "A", "B", 6, 42);
    const auto p2 = interzonal_loss_population(net, zm, "A", "B", 6, 42);
    const auto p3 = interzonal_loss_population(net, zm, "A", "B", 6, 43);
    REQUIRE(p1.samples.size() == p2.samples.size());
    for (std::size_t k = 0; k < p1.samples.size(); ++k) {
        CHECK(p1.samples[k].loss == p2.samples[k].loss);
        CHECK(p1.samples[k].seed == p2.samples[k].seed);
    }
    CHECK(p1.samples[0].loss != p3.samples[0].loss);
    // The whole-system population reuses the pair's operating points.
    const auto sys = system_loss_population(net, zm, 6, 42);
    CHECK(sys.samples.size() == 6 * 6);
    CHECK(sys.samples[0].seed == p1.samples[0].seed);
    CHECK(sys.samples[0].loss == p1.samples[0].loss);
}

TEST_CASE("two zones only: correction factor is one") {
    const auto net = two_zone_line(0.02, 0.1);
    const auto zm = zone_map_of(net);
    const auto pair = interzonal_loss_population(net, zm, "A", "B", 30, 9);
    const auto sys = system_loss_population(net, zm, 30, 9);
    const auto cf = correction_factor(net, zm, {{"A-B", pair}}, sys);
    CHECK(cf.gamma == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cf.raw_gamma == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cf.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cf.scenarios == 60);
    CHECK(cf.interpolated == 0);
}

TEST_CASE("three-zone chain: pairwise losses double count the middle zone") {
    const auto net = chain(0.01);
    const auto zm = zone_map_of(net);
    std::map<std::string, LossPopulation> pairs;
    pairs["A-B"] = interzonal_loss_population(net, zm, "A", "B", 40, 5);
    pairs["B-C"] = interzonal_loss_population(net, zm, "B", "C", 40, 5);
    const auto sys = system_loss_population(net, zm, 40, 5);
    const auto cf = correction_factor(net, zm, pairs, sys);
    MESSAGE("chain gamma = " << cf.raw_gamma << ", R^2 = " << cf.r_squared);
    CHECK(cf.raw_gamma < 1.0);
    CHECK(cf.gamma > 0.0);
    CHECK(cf.gamma <= 1.0);
    CHECK(cf.r_squared > 0.0);
    CHECK(cf.r_squared <= 1.0);
    // A-C exchanges pass through B: the transit-only fit is the low one.
    REQUIRE(cf.transit.count("B"));
    CHECK(cf.transit.at("B") < cf.transit.at("A"));
    CHECK(cf.transit.at("B") < 1.0);
}

TEST_CASE("correction factor errors") {
    const auto net = two_zone_line(0.0, 0.1);
    const auto zm = zone_map_of(net);
    const auto pair = interzonal_loss_population(net, zm, "A", "B", 5, 1);
    const auto sys = system_loss_population(net, zm, 5, 1);
    CHECK_THROWS_AS(correction_factor(net, zm, {{"A-B", pair}}, sys), CalibrationError);
    CHECK_THROWS_AS(correction_factor(net, zm, {}, sys), CalibrationError);

    const auto lossy_net = chain(0.01);
    const auto lz = zone_map_of(lossy_net);
    const auto ab = interzonal_loss_population(lossy_net, lz, "A", "B", 5, 1);
    const auto s2 = system_loss_population(lossy_net, lz, 5, 1);
    CHECK_THROWS_AS(correction_factor(lossy_net, lz, {{"A-B", ab}}, s2), CalibrationError);
}

TEST_CASE("recovery: noiseless quadratic against the direct piecewise fit") {
    const QuadraticLoss q{0.0123, 0.004, 0.0007};
    const double cap = 3.0;
    const auto samples = synthetic(q, cap, 200, 11);
    const auto model = calibrate_loss_factors(samples, 1.0, LossKind::Piecewise, cap);
    const auto oracle = fit_piecewise(q, cap, 10, SegmentFit::LeastSquares);
    CHECK(model.segments.size() == 10);
    CHECK_NOTHROW(validate(model));
    CHECK(grid_error(model, q, cap) <= grid_error(oracle, q, cap) + 1e-9);

    const auto fitted = fit_loss_quadratic([&] {
        std::vector<double> f;
        for (const auto& s : samples) f.push_back(s.flow);
        return f;
    }(), [&] {
        std::vector<double> l;
        for (const auto& s : samples) l.push_back(s.loss);
        return l;
    }());
    CHECK(fitted.a == doctest::Approx(q.a).epsilon(1e-10));
    CHECK(fitted.b == doctest::Approx(q.b).epsilon(1e-9));
    CHECK(fitted.c == doctest::Approx(q.c).epsilon(1e-8));
}

TEST_CASE("linear data are recovered exactly, gamma scales the samples") {
    const QuadraticLoss lin{0.0, 0.02, 0.001};
    const auto samples = synthetic(lin, 2.0, 30, 4);
    const auto m = calibrate_loss_factors(samples, 1.0, LossKind::Linear, 2.0);
    REQUIRE(m.segments.size() == 1);
    CHECK(std::abs(m.segments[0].alpha - 0.02) < 1e-9);
    CHECK(std::abs(m.segments[0].beta - 0.001) < 1e-9);
    const auto half = calibrate_loss_factors(samples, 0.5, LossKind::Linear, 2.0);
    CHECK(std::abs(half.segments[0].alpha - 0.01) < 1e-9);
    CHECK(std::abs(half.segments[0].beta - 0.0005) < 1e-9);
}

TEST_CASE("coverage and argument errors") {
    std::vector<LossSample> still(40);
    CHECK_THROWS_AS(calibrate_loss_factors(still, 1.0, LossKind::Piecewise, 2.0), CalibrationError);
    const auto few = synthetic({0.01, 0, 0}, 2.0, 21, 2);
    CHECK_THROWS_AS(calibrate_loss_factors(few, 1.0, LossKind::Piecewise, 2.0), CalibrationError);
    CHECK_NOTHROW(calibrate_loss_factors(synthetic({0.01, 0, 0}, 2.0, 22, 2), 1.0, LossKind::Piecewise, 2.0));
    const auto narrow = synthetic({0.01, 0, 0}, 0.9, 50, 2);
    CHECK_THROWS_AS(calibrate_loss_factors(narrow, 1.0, LossKind::Linear, 2.0), CalibrationError);
    const auto ok = synthetic({0.01, 0, 0}, 2.0, 50, 2);
    CHECK_THROWS_AS(calibrate_loss_factors(ok, 0.0, LossKind::Linear, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_loss_factors(ok, 1.5, LossKind::Linear, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_loss_factors(ok, 1.0, LossKind::Constant, 2.0), std::invalid_argument);
}

TEST_CASE("noisy or concave data still give valid convex models") {
    std::mt19937 rng(8);
    std::normal_distribution<double> noise(0.0, 0.002);
    for (int trial = 0; trial < 30; ++trial) {
        auto samples = synthetic({0.01 * (trial % 3), 0.003 * (trial % 2), 0.0}, 2.0, 60, 100 + trial);
        for (auto& s : samples) s.loss += noise(rng) - (trial % 5 == 0 ? 0.004 * s.flow * s.flow : 0.0);
        for (auto kind : {LossKind::Linear, LossKind::Piecewise}) {
            const auto m = calibrate_loss_factors(samples, 0.8, kind, 2.0);
            CHECK_NOTHROW(validate(m));
            for (std::size_t k = 1; k < m.segments.size(); ++k)
                CHECK(m.segments[k].alpha >= m.segments[k - 1].alpha - 1e-12);
            CHECK(m.segments.front().alpha >= -1e-12);
        }
    }
}

TEST_CASE("96-bus: intra-zonal inclusive factors dominate line-only ones") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto zm = zone_map_of(net);
    const auto zn = reduce_to_zonal(net, zm);
    for (const auto& c : zn.corridors) {
        const auto pop = interzonal_loss_population(net, zm, zn.zones[c.from_zone], zn.zones[c.to_zone], 20, 17);
        CHECK(pop.dropped == 0);
        double max_balance = 0.0;
        for (const auto& s : pop.samples) max_balance = std::max(max_balance, s.balance_error);
        CHECK(max_balance < 1e-8);
        const auto total = calibrate_loss_factors(pop.samples, 1.0, LossKind::Piecewise, c.capacity, 10,
                                                  CalibrationTarget::TotalLoss, c.id);
        const auto line = calibrate_loss_factors(pop.samples, 1.0, LossKind::Piecewise, c.capacity, 10,
                                                 CalibrationTarget::LineOnly, c.id);
        std::size_t below = 0;
        for (const auto& s : pop.samples) below += total.eval(s.flow) < line.eval(s.flow);
        CHECK_MESSAGE(below == 0, c.id);
        CHECK(total.line_id == c.id);
    }
}

TEST_CASE("samples CSV") {
    const auto net = two_zone_line(0.01, 0.1);
    const auto pop = interzonal_loss_population(net, zone_map_of(net), "A", "B", 2, 1);
    const auto csv = samples_to_csv(pop);
    CHECK(csv.rfind("pair,direction,flow_pu,exchange_pu,loss_pu,line_loss_pu,seed\n", 0) == 0);
    CHECK(csv.find("A-B,A>B,") != std::string::npos);
    CHECK(csv.find("A-B,B>A,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("96-bus HVDC population adds intra-zonal losses to the link's own") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto zm = zone_map_of(net);
    const auto& link = net.hvdc_links().front();
    const auto pop = hvdc_loss_population(net, zm, link.id, 10, 3);
    REQUIRE(pop.samples.size() == 20);
    for (const auto& s : pop.samples) {
        CHECK(s.corridor == link.id);
        CHECK(s.flow >= 0.2 * link.capacity - 1e-12);
        CHECK(s.flow <= link.capacity + 1e-12);
        CHECK(s.line_loss == doctest::Approx(link.loss_params(s.flow)).epsilon(1e-12));
        CHECK(s.loss > s.line_loss);
        CHECK(s.balance_error < 1e-8);
    }
    CHECK_THROWS_AS(hvdc_loss_population(net, zm, "nope", 5, 1), std::invalid_argument);
}
