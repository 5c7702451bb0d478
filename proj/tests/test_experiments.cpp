#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lossy/experiments.hpp"

using namespace lossy;

namespace {

const std::string kCases = std::string(LOSSY_SOURCE_DIR) + "/cases/";

// Two zones, a meshed AC border and one HVDC link; cheap units and wind in A.
Network two_area(double r = 0.01, QuadraticLoss dc = {0.01, 0.005, 0.0}) {
    std::vector<Bus> buses = {{"a1", "A", true}, {"a2", "A", false}, {"b1", "B", false}, {"b2", "B", false}};
    std::vector<ACLine> lines = {{"La", "a1", "a2", 10, r, 0, 3.0},
                                 {"Lab", "a2", "b1", 8, 2 * r, 0, 1.5},
                                 {"Lb", "b1", "b2", 10, r, 0, 3.0},
                                 {"Lab2", "a1", "b2", 5, 2 * r, 0, 1.0}};
    std::vector<HVDCLink> links = {{"H", "a2", "b2", 1.0, dc}};
    std::vector<Generator> gens = {{"GA", "a1", 10, 0, 3.0}, {"WA", "a2", 0, 0, 1.0, true}, {"GB", "b1", 40, 0, 3.0}};
    std::vector<Load> loads = {{"DA", "a2", kDefaultInelasticUtility, 1.0, 1.0},
                               {"DB", "b2", kDefaultInelasticUtility, 2.2, 2.2}};
    return Network::build("two-area", 100, 230, buses, lines, links, gens, loads);
}

ScenarioSetup nodal_setup(const Network& net) {
    ScenarioSetup s;
    s.pricing = Pricing::Nodal;
    s.factors = line_loss_factors(net, Pricing::Nodal, LossKind::Piecewise, 30.0);
    return s;
}

ScenarioSetup zonal_setup(const Network& net) {
    ScenarioSetup s;
    s.pricing = Pricing::Zonal;
    s.factors = line_loss_factors(net, Pricing::Zonal, LossKind::Piecewise, 30.0);
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("snapshots are reproducible and stay near the case loads") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto a = generate_snapshots(net, 168, 11), b = generate_snapshots(net, 168, 11);
    const auto c = generate_snapshots(net, 168, 12);
    REQUIRE(a.size() == 168);
    bool differs = false;
    std::map<std::string, double> mean;
    for (std::size_t h = 0; h < a.size(); ++h) {
        CHECK(a[h].hour == h);
        CHECK(a[h].load_scale == b[h].load_scale);
        CHECK(a[h].wind == b[h].wind);
        differs = differs || a[h].load_scale != c[h].load_scale;
        CHECK(a[h].load_scale.size() == 4);
        CHECK(a[h].wind.size() == 4);
        for (const auto& [z, s] : a[h].load_scale) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.4);
            mean[z] += s / 168.0;
        }
        for (const auto& [g, w] : a[h].wind) {
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            const auto& gens = net.generators();
            const auto it = std::find_if(gens.begin(), gens.end(), [&](const Generator& x) { return x.id == g; });
            REQUIRE(it != gens.end());
            CHECK(it->wind);
        }
    }
    CHECK(differs);
    for (const auto& [z, m] : mean) {
        CHECK(m >= 0.95);
        CHECK(m <= 1.05);
    }
    CHECK_THROWS_AS(generate_snapshots(net, 0, 1), std::invalid_argument);
}

TEST_CASE("a year of snapshots is cheap") {
    const auto net = load_case_file(kCases + "rts4_96bus.json");
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = generate_snapshots(net, 8760, 3);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(s.size() == 8760);
    CHECK(dt < 1.0);
}

TEST_CASE("apply_snapshot scales loads by zone and derates wind") {
    const auto net = two_area();
    Snapshot s;
    s.load_scale = {{"A", 0.5}, {"B", 1.2}};
    s.wind = {{"WA", 0.25}};
    const auto h = apply_snapshot(net, s);
    CHECK(h.loads()[0].d_max == doctest::Approx(0.5));
    CHECK(h.loads()[0].d_min == doctest::Approx(0.5));
    CHECK(h.loads()[1].d_max == doctest::Approx(2.64));
    CHECK(h.generators()[1].g_max == doctest::Approx(0.25));
    CHECK(h.generators()[0].g_max == doctest::Approx(3.0));

    Snapshot bad;
    bad.wind = {{"GA", 0.5}};
    CHECK_THROWS_AS(apply_snapshot(net, bad), std::invalid_argument);
    bad.wind.clear();
    bad.load_scale = {{"A", -0.1}};
    CHECK_THROWS_AS(apply_snapshot(net, bad), std::invalid_argument);
}

TEST_CASE("pricing names round-trip") {
    CHECK(pricing_from_string(to_string(Pricing::Nodal)) == Pricing::Nodal);
    CHECK(pricing_from_string(to_string(Pricing::Zonal)) == Pricing::Zonal);
    CHECK_THROWS_AS(pricing_from_string("regional"), std::invalid_argument);
}

TEST_CASE("line loss factors: two-point linear and fixed-length chords") {
    const auto net = two_area(0.02);
    const auto lin = line_loss_factors(net, Pricing::Nodal, LossKind::Linear);
    const auto& m = lin.at("Lab");  // R = 0.04, capacity 1.5
    const double f2 = kTwoPointLoading * 1.5;
    CHECK(m.eval(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.eval(f2) == doctest::Approx(0.04 * f2 * f2).epsilon(1e-12));
    CHECK(lin.count("H") == 1);

    const auto pwl = line_loss_factors(net, Pricing::Nodal, LossKind::Piecewise, 30.0);
    const auto& p = pwl.at("Lab");
    CHECK(p.segments.size() == 5);  // 150 MW in 30 MW pieces
    for (const auto& s : p.segments) CHECK(p.eval(s.f_star) == doctest::Approx(0.04 * s.f_star * s.f_star));

    const auto zonal = line_loss_factors(net, Pricing::Zonal, LossKind::Piecewise);
    CHECK(zonal.count("Lab") == 0);  // corridors replace border lines
    CHECK(zonal.count("H") == 1);
    CHECK_THROWS_AS(line_loss_factors(net, Pricing::Nodal, LossKind::Constant), std::invalid_argument);
}

TEST_CASE("lossless network: every configuration clears the same welfare") {
    const auto net = two_area(0.0, {});
    const auto snaps = generate_snapshots(net, 6, 5);
    for (auto setup : {nodal_setup(net), zonal_setup(net)}) {
        const auto r = run_scenarios(net, snaps, setup, "lossless");
        CHECK(r.excluded == 0);
        for (const auto& s : r.snapshots) {
            CHECK(s.offline_losses == doctest::Approx(0.0).epsilon(1e-12));
            for (std::size_t c = 0; c < kConfigs.size(); ++c)
                CHECK(s.configs[c].welfare == doctest::Approx(s.configs[0].welfare).epsilon(1e-9));
        }
    }
}

TEST_CASE("totals are the sums of the hourly deltas") {
    const auto net = two_area();
    const auto snaps = generate_snapshots(net, 12, 9);
    for (auto setup : {nodal_setup(net), zonal_setup(net)}) {
        const auto r = run_scenarios(net, snaps, setup, "sum");
        REQUIRE(r.snapshots.size() == 12);
        CHECK(r.excluded == 0);
        CHECK(r.nodes.size() == (setup.pricing == Pricing::Nodal ? 4u : 2u));
        std::array<double, 4> sum{}, cost{};
        std::array<std::size_t, 4> neg{};
        for (const auto& s : r.snapshots) {
            REQUIRE(s.ok);
            CHECK(s.delta[0] == 0.0);
            CHECK(s.offline_losses > 0.0);
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(s.delta[c] == doctest::Approx(s.configs[c].welfare - s.configs[0].welfare));
                sum[c] += s.delta[c];
                cost[c] += s.cost_delta[c];
                neg[c] += s.delta[c] < -kNegativeDeltaTolerance;
            }
        }
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(r.total[c] == doctest::Approx(sum[c]));
            CHECK(r.total_cost[c] == doctest::Approx(cost[c]));
            CHECK(r.negative_hours[c] == neg[c]);
        }
        const auto rows = savings_table(r);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].total_musd == 0.0);
        CHECK(rows[0].negative_hours == 0);
        CHECK(rows[3].total_musd == doctest::Approx(sum[3] / 1e6));
        CHECK(rows[3].hours == 12);
    }
}

TEST_CASE("fixing the restricted problems at the full optimum gives dominance every hour") {
    const auto net = two_area(0.03);
    const auto snaps = generate_snapshots(net, 8, 21);
    for (auto setup : {nodal_setup(net), zonal_setup(net)}) {
        setup.fix_at_full_optimum = true;
        const auto r = run_scenarios(net, snaps, setup);
        for (const auto& s : r.snapshots) {
            REQUIRE(s.ok);
            for (std::size_t c = 0; c < 3; ++c) CHECK(s.configs[3].welfare - s.configs[c].welfare >= -1e-9);
        }
        for (std::size_t c = 0; c < 3; ++c) CHECK(r.total[3] >= r.total[c] - 1e-6);
    }
}

TEST_CASE("hours whose power flow fails are excluded; setup errors are thrown") {
    const auto net = two_area();
    const auto snaps = generate_snapshots(net, 3, 2);
    auto setup = nodal_setup(net);
    setup.acpf.max_iterations = 0;
    const auto r = run_scenarios(net, snaps, setup, "broken");
    CHECK(r.excluded == 3);
    CHECK(r.included() == 0);
    for (const auto& s : r.snapshots) {
        CHECK_FALSE(s.ok);
        CHECK_FALSE(s.error.empty());
    }
    for (const auto& row : savings_table(r)) {
        CHECK(row.total_musd == 0.0);
        CHECK(row.negative_share == 0.0);
        CHECK(row.excluded == 3);
    }

    auto missing = nodal_setup(net);
    missing.factors.erase("Lb");
    CHECK_THROWS_AS(run_scenarios(net, snaps, missing), std::invalid_argument);

    auto wrong = nodal_setup(net);
    wrong.ptdf = zonal_ptdf_estimate(net, zone_map_of(net), {}, 1);
    CHECK_THROWS_AS(run_scenarios(net, snaps, wrong), std::invalid_argument);
}

TEST_CASE("case ex1: one hour with the published linear factors") {
    const auto net = load_case_file(kCases + "ex1_3bus.json");
    ScenarioSetup setup;
    setup.pricing = Pricing::Nodal;
    setup.factors = line_loss_factors(net, Pricing::Nodal, LossKind::Linear);  // AC lines: R = 0
    for (const auto& [id, m] : loss_table_from_csv(slurp(kCases + "hvdc_factors_linear.csv"))) setup.factors[id] = m;
    const auto r = run_scenarios(net, {Snapshot{}}, setup, "ex1");
    REQUIRE(r.snapshots.size() == 1);
    const auto& s = r.snapshots[0];
    REQUIRE(s.ok);
    // Lossless AC lines: the offline losses are the HVDC ones only, and
    // modelling AC losses changes nothing.
    CHECK(s.offline_losses > 0.0);
    CHECK(s.configs[2].welfare == doctest::Approx(s.configs[0].welfare).epsilon(1e-9));
    CHECK(s.configs[3].welfare == doctest::Approx(s.configs[1].welfare).epsilon(1e-9));
    CHECK(s.configs[3].prices.size() == 3);
    CHECK(s.configs[3].prices[0] == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("experiment CSVs are byte-reproducible") {
    const auto net = two_area();
    const auto snaps = generate_snapshots(net, 4, 8);
    auto setup = zonal_setup(net);
    const auto tmp = std::filesystem::temp_directory_path() / "lossy_experiment_csv";
    std::filesystem::remove_all(tmp);
    for (const char* run : {"a", "b"}) {
        const auto r1 = run_scenarios(net, snaps, setup, "zonal");
        auto broken = setup;
        broken.acpf.max_iterations = 0;
        const auto r2 = run_scenarios(net, {snaps[0]}, broken, "broken");
        write_experiment_csvs(tmp / run, {r1, r2});
    }
    for (const char* f : {"scenario_results.csv", "deltas.csv", "savings_table.csv"}) {
        const auto a = slurp(tmp / "a" / f), b = slurp(tmp / "b" / f);
        CHECK(!a.empty());
        CHECK(a == b);
    }
    const auto sr = slurp(tmp / "a" / "scenario_results.csv");
    CHECK(sr.rfind("simulation,hour,status,config,welfare_usd,", 0) == 0);
    CHECK(sr.find("broken,0,excluded: ") != std::string::npos);
    const auto st = slurp(tmp / "a" / "savings_table.csv");
    CHECK(st.find("zonal,both,") != std::string::npos);
    CHECK(st.find("broken,none,0,0,0,0,0,1") != std::string::npos);
    // 4 hours x 3 non-trivial configs + header.
    const auto dl = slurp(tmp / "a" / "deltas.csv");
    CHECK(std::count(dl.begin(), dl.end(), '\n') == 13);
    std::filesystem::remove_all(tmp);
}

TEST_CASE("results do not depend on the number of workers") {
    const auto net = two_area();
    const auto snaps = generate_snapshots(net, 6, 4);
    const auto tmp = std::filesystem::temp_directory_path() / "lossy_experiment_jobs";
    std::filesystem::remove_all(tmp);
    for (std::size_t jobs : {1, 3}) {
        auto setup = nodal_setup(net);
        setup.jobs = jobs;
        write_experiment_csvs(tmp / std::to_string(jobs), {run_scenarios(net, snaps, setup, "nodal")});
    }
    CHECK(slurp(tmp / "1" / "scenario_results.csv") == slurp(tmp / "3" / "scenario_results.csv"));
    std::filesystem::remove_all(tmp);

    PopulationOptions one, four;
    one.jobs = 1;
    four.jobs = 4;
    const auto zm = zone_map_of(net);
    CHECK(samples_to_csv(interzonal_loss_population(net, zm, "A", "B", 20, 3, one)) ==
          samples_to_csv(interzonal_loss_population(net, zm, "A", "B", 20, 3, four)));
}

TEST_CASE("clear_hour matches the scenario run for the same hour") {
    const auto net = two_area();
    const auto snaps = generate_snapshots(net, 2, 6);
    for (auto setup : {nodal_setup(net), zonal_setup(net)}) {
        const auto r = run_scenarios(net, snaps, setup);
        for (std::size_t c = 0; c < kConfigs.size(); ++c) {
            const auto o = clear_hour(net, snaps[1], setup, kConfigs[c]);
            CHECK(o.objective == doctest::Approx(r.snapshots[1].configs[c].welfare).epsilon(1e-12));
            CHECK(o.prices == r.snapshots[1].configs[c].prices);
        }
    }
}
