#include <doctest.h>

#include <random>

#include "lossy/ptdf.hpp"

using namespace lossy;

namespace {

const std::string kCases = std::string(LOSSY_SOURCE_DIR) + "/cases/";

Network triangle() {
    return Network::build("triangle", 100, 400, {{"1", "A", false}, {"2", "A", false}, {"3", "A", true}},
                          {{"1-2", "1", "2", 5.0, 0.0, 0.0, 1.0},
                           {"1-3", "1", "3", 5.0, 0.0, 0.0, 1.0},
                           {"2-3", "2", "3", 5.0, 0.0, 0.0, 1.0}},
                          {}, {}, {});
}

Eigen::VectorXd random_balanced(const Network& net, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd p(static_cast<Eigen::Index>(net.buses().size()));
    for (auto& v : p) v = n(rng);
    std::vector<double> sum(net.component_count(), 0.0);
    std::vector<double> count(net.component_count(), 0.0);
    for (std::size_t i = 0; i < net.buses().size(); ++i) {
        sum[net.component_of_bus()[i]] += p[static_cast<Eigen::Index>(i)];
        count[net.component_of_bus()[i]] += 1;
    }
    for (std::size_t i = 0; i < net.buses().size(); ++i)
        p[static_cast<Eigen::Index>(i)] -= sum[net.component_of_bus()[i]] / count[net.component_of_bus()[i]];
    return p;
}

}  // namespace

TEST_CASE("two-bus PTDF") {
    const auto net = Network::build("two", 100, 400, {{"1", "A", true}, {"2", "A", false}},
                                    {{"L", "1", "2", 10.0, 0.0, 0.0, 1.0}}, {}, {}, {});
    const auto p = nodal_ptdf(net);
    REQUIRE(p.rows() == 1);
    REQUIRE(p.cols() == 2);
    CHECK(p.values(0, 0) == 0.0);
    CHECK(p.values(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("equal-susceptance triangle") {
    const auto net = triangle();
    const auto p = nodal_ptdf(net);
    CHECK(p.values.col(2).isZero());
    Eigen::VectorXd inj(3);
    inj << 1, 0, -1;
    // Kirchhoff on the loop: the direct path carries twice the two-hop path.
    const auto f = flows_from_injections(p, inj);
    CHECK(f[0] == doctest::Approx(1.0 / 3));
    CHECK(f[1] == doctest::Approx(2.0 / 3));
    CHECK(f[2] == doctest::Approx(1.0 / 3));
    CHECK(flows_from_injections(p, Eigen::VectorXd::Zero(3)).isZero());
    const auto f2 = flows_from_injections(p, 2 * inj);
    CHECK((f2 - 2 * f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unbalanced injections are rejected") {
    const auto p = nodal_ptdf(triangle());
    Eigen::VectorXd inj(3);
    inj << 1, 0, 0;
    CHECK_THROWS_AS(flows_from_injections(p, inj), std::invalid_argument);
    CHECK_THROWS_AS(flows_from_injections(p, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("slack override must name a known bus") {
    CHECK_THROWS_AS(nodal_ptdf(triangle(), std::string("9")), CaseError);
}

TEST_CASE("slack invariance of flows on the 96-bus case") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto a = nodal_ptdf(net);
    const auto b = nodal_ptdf(net, std::string("322"));
    CHECK(a.values.cwiseAbs().maxCoeff() <= 1 + 1e-9);
    CHECK(b.values.cwiseAbs().maxCoeff() <= 1 + 1e-9);
    CHECK(b.values.col(static_cast<Eigen::Index>(net.bus_index("322"))).isZero());
    std::mt19937_64 rng(3);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const auto p = random_balanced(net, rng);
        worst = std::max(worst, (flows_from_injections(a, p) - flows_from_injections(b, p)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("slack invariance on the two-component 3-bus case") {
    const auto net = load_case_file(kCases + "ex1_3bus.json");
    const auto a = nodal_ptdf(net);
    const auto b = nodal_ptdf(net, std::string("3"));
    CHECK(a.slack_cols.size() == 2);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 20; ++k) {
        const auto p = random_balanced(net, rng);
        CHECK((flows_from_injections(a, p) - flows_from_injections(b, p)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("zonal estimate on a single corridor") {
    const auto net = Network::build(
        "pair", 100, 400,
        {{"1", "A", true}, {"2", "A", false}, {"3", "B", false}, {"4", "B", false}},
        {{"1-2", "1", "2", 4.0, 0.0, 0.0, 1.0}, {"2-3", "2", "3", 6.0, 0.0, 0.0, 1.0}, {"3-4", "3", "4", 3.0, 0.0, 0.0, 1.0}},
        {}, {{"g1", "1", 10, 0, 1, false}, {"g2", "2", 12, 0, 1, false}, {"g3", "4", 15, 0, 1, false}},
        {{"d", "3", 1000, 1, 1}});
    const auto z = zonal_ptdf_estimate(net, zone_map_of(net), {}, 1);
    REQUIRE(z.rows() == 1);
    const auto a = static_cast<Eigen::Index>(0), b = static_cast<Eigen::Index>(1);
    // Every transfer from A to B crosses the single corridor.
    CHECK(std::abs(z.values(0, b) - z.values(0, a) - (-1.0)) <= 1e-6);
    CHECK(z.values(0, a) == 0.0);  // slack zone
    for (double r2 : z.r_squared) {
        CHECK(r2 >= 0.0);
        CHECK(r2 <= 1.0);
    }
}

TEST_CASE("zonal estimate is rank deficient with one pattern") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    SamplingConfig cfg;
    cfg.n_patterns = 1;
    try {
        zonal_ptdf_estimate(net, zone_map_of(net), cfg, 1);
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(std::string(e.what()).find("n_patterns") != std::string::npos);
    }
}

TEST_CASE("zonal estimate against the generation-weighted aggregation oracle") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto zm = zone_map_of(net);
    const auto zn = reduce_to_zonal(net, zm);
    const auto est = zonal_ptdf_estimate(net, zm, {}, 42);
    const auto again = zonal_ptdf_estimate(net, zm, {}, 42);
    CHECK(est.values == again.values);

    // Oracle: corridor rows of the nodal PTDF, columns averaged within each zone
    // with generation-capacity weights, referenced to the slack zone.
    const auto nodal = nodal_ptdf(net);
    Eigen::MatrixXd corridor_rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(zn.corridors.size()),
                                                          static_cast<Eigen::Index>(net.buses().size()));
    for (std::size_t c = 0; c < zn.corridors.size(); ++c)
        for (std::size_t m = 0; m < zn.corridors[c].member_lines.size(); ++m)
            corridor_rows.row(static_cast<Eigen::Index>(c)) +=
                zn.corridors[c].orientation[m] * nodal.values.row(static_cast<Eigen::Index>(zn.corridors[c].member_lines[m]));
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.buses().size()),
                                                    static_cast<Eigen::Index>(zn.zones.size()));
    for (const auto& g : net.generators()) {
        const auto b = net.bus_index(g.bus);
        weights(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(zn.zone_of_bus[b])) += g.g_max;
    }
    for (Eigen::Index z = 0; z < weights.cols(); ++z) weights.col(z) /= weights.col(z).sum();
    Eigen::MatrixXd oracle = corridor_rows * weights;
    const auto slack_zone = static_cast<Eigen::Index>(est.slack_cols[0]);
    for (Eigen::Index z = 0; z < oracle.cols(); ++z)
        if (z != slack_zone) oracle.col(z) -= oracle.col(slack_zone);
    oracle.col(slack_zone).setZero();

    const double err = (oracle - est.values).cwiseAbs().maxCoeff();
    MESSAGE("zonal PTDF max |estimate - oracle| = " << err);
    CHECK(err <= 0.05);
}

TEST_CASE("PTDF CSV round trip") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto p = nodal_ptdf(net);
    const auto back = ptdf_from_csv(ptdf_to_csv(p), PtdfKind::Nodal);
    CHECK(back.row_ids == p.row_ids);
    CHECK(back.col_ids == p.col_ids);
    CHECK(back.values == p.values);
    CHECK(back.slack_cols == p.slack_cols);
}
