// Batch entry point: clear, ptdf, calibrate, experiment, report.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lossy/calibration.hpp"
#include "lossy/experiments.hpp"

namespace fs = std::filesystem;
using namespace lossy;

namespace {

// Domain failures: exit 1.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw DomainError(std::string(what) + " not found: " + path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Network read_case(const std::string& path) { return load_case(read_file(path, "case file")); }

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path.string());
    out << text;
}

int log_level() {
    const char* v = std::getenv("LOSSY_CLEARING_LOG");
    return v ? std::atoi(v) : 0;
}

struct Common {
    std::string case_path;
    std::string out = "out";
    std::uint64_t seed = 1;
    std::size_t jobs = 0;
};

struct FactorFlags {
    std::string pricing = "nodal";
    std::string kind = "pwl";
    std::string table;
    std::size_t segments = 0;
    double segment_mw = 0.0;
};

void add_factor_flags(CLI::App* cmd, FactorFlags& f) {
    cmd->add_option("--pricing", f.pricing, "nodal or zonal")->check(CLI::IsMember({"nodal", "zonal"}));
    cmd->add_option("--loss-kind", f.kind, "factors fitted from the case quadratics: constant, linear or pwl")
        ->check(CLI::IsMember({"constant", "linear", "pwl"}));
    cmd->add_option("--loss-table", f.table, "loss-factor CSV; overrides the fitted factors of the branches it lists");
    auto* k = cmd->add_option("--segments", f.segments, "pwl: equal segments per branch")->check(CLI::PositiveNumber);
    auto* l = cmd->add_option("--segment-mw", f.segment_mw, "pwl: segment length in MW (default 60)")
                  ->check(CLI::PositiveNumber);
    k->excludes(l);
}

// Factors for every branch of the priced grid: fitted from the case's own
// quadratics, then replaced by table entries where a table is given.
LossTable build_factors(const Network& net, Pricing pricing, const FactorFlags& f) {
    const auto grid = pricing == Pricing::Nodal ? MarketGrid::nodal(net)
                                                : MarketGrid::zonal(reduce_to_zonal(net, zone_map_of(net)));
    const LossKind kind = loss_kind_from_string(f.kind);
    LossTable t;
    auto fit = [&](const GridBranch& b) {
        switch (kind) {
            case LossKind::Constant: return fit_constant(b.loss, kTwoPointLoading * b.capacity, b.capacity, b.id);
            case LossKind::Linear: return fit_linear(b.loss, LeastSquares{0.0, b.capacity}, b.capacity, b.id);
            case LossKind::Piecewise:
                if (f.segments) return fit_piecewise(b.loss, b.capacity, f.segments, SegmentFit::Chord, b.id);
                return fit_piecewise_by_length(b.loss, b.capacity,
                                               (f.segment_mw > 0 ? f.segment_mw : kSegmentMw) / net.base_power(),
                                               SegmentFit::Chord, b.id);
        }
        throw std::logic_error("unreachable");
    };
    for (const auto& b : grid.ac) t[b.id] = fit(b);
    for (const auto& b : grid.dc) t[b.id] = fit(b);
    if (!f.table.empty())
        for (auto& [id, m] : loss_table_from_csv(read_file(f.table, "loss table"))) t[id] = std::move(m);
    return t;
}

// --- clear ----------------------------------------------------------------------

struct ClearArgs {
    Common c;
    FactorFlags f;
    std::string mode = "both";
};

void run_clear(const ClearArgs& a) {
    const auto net = read_case(a.c.case_path);
    ScenarioSetup setup;
    setup.pricing = pricing_from_string(a.f.pricing);
    setup.factors = build_factors(net, setup.pricing, a.f);
    setup.ptdf_seed = a.c.seed;
    const LossMode mode = loss_mode_from_string(a.mode);
    const auto o = clear_hour(net, Snapshot{}, setup, mode);
    write_outcome_csvs(a.c.out, {{0, to_string(mode), o}});
    std::cout << std::fixed << std::setprecision(4) << "welfare " << o.objective << " $/h, losses";
    double loss = 0.0;
    for (double v : o.loss_ac) loss += v;
    for (double v : o.loss_dc) loss += v;
    std::cout << ' ' << loss * o.base_power << " MW\n";
    for (std::size_t i = 0; i < o.nodes.size(); ++i) std::cout << "  " << o.nodes[i] << ' ' << o.prices[i] << " $/MWh\n";
    if (log_level() > 0) std::cerr << "kkt worst " << o.kkt.worst() << ", " << o.iterations << " iterations\n";
}

// --- ptdf -----------------------------------------------------------------------

struct PtdfArgs {
    Common c;
    std::string pricing = "nodal";
    std::size_t patterns = SamplingConfig{}.n_patterns;
};

void run_ptdf(const PtdfArgs& a) {
    const auto net = read_case(a.c.case_path);
    PTDFMatrix m;
    if (pricing_from_string(a.pricing) == Pricing::Nodal) {
        m = nodal_ptdf(net);
    } else {
        SamplingConfig s;
        s.n_patterns = a.patterns;
        m = zonal_ptdf_estimate(net, zone_map_of(net), s, a.c.seed);
        std::ostringstream r2;
        r2 << "row,r_squared\n" << std::setprecision(10);
        for (std::size_t i = 0; i < m.rows(); ++i) r2 << m.row_ids[i] << ',' << m.r_squared[i] << '\n';
        write_file(fs::path(a.c.out) / "ptdf_r2.csv", r2.str());
    }
    write_file(fs::path(a.c.out) / "ptdf.csv", ptdf_to_csv(m));
    std::cout << m.rows() << " x " << m.cols() << " " << a.pricing << " PTDF written to " << a.c.out << "\n";
}

// --- calibrate ------------------------------------------------------------------

struct CalibrateArgs {
    Common c;
    std::size_t samples = CalibrationOptions{}.samples;
    std::size_t segments = CalibrationOptions{}.segments;
    std::string kind = "pwl";
};

void run_calibrate(const CalibrateArgs& a) {
    const auto net = read_case(a.c.case_path);
    CalibrationOptions opt;
    opt.samples = a.samples;
    opt.seed = a.c.seed;
    opt.segments = a.kind == "linear" ? 1 : a.segments;
    opt.population.jobs = a.c.jobs;
    const auto cal = calibrated_loss_factors(net, zone_map_of(net), opt);
    write_file(fs::path(a.c.out) / "loss_factors.csv", loss_table_to_csv(cal.table));
    std::string samples;
    for (const auto& [id, pop] : cal.populations) {
        auto csv = samples_to_csv(pop);
        if (!samples.empty()) csv.erase(0, csv.find('\n') + 1);  // one header
        samples += csv;
    }
    write_file(fs::path(a.c.out) / "samples.csv", samples);
    std::ostringstream g;
    g << std::setprecision(10) << "gamma,raw_gamma,r_squared,scenarios,interpolated\n"
      << cal.gamma.gamma << ',' << cal.gamma.raw_gamma << ',' << cal.gamma.r_squared << ',' << cal.gamma.scenarios << ','
      << cal.gamma.interpolated << '\n';
    write_file(fs::path(a.c.out) / "gamma.csv", g.str());
    std::cout << std::setprecision(4) << "gamma " << cal.gamma.gamma << " (R^2 " << cal.gamma.r_squared << ", "
              << cal.gamma.scenarios << " scenarios); " << cal.table.size() << " loss factors written to " << a.c.out
              << "\n";
}

// --- experiment -----------------------------------------------------------------

struct ExperimentArgs {
    Common c;
    std::size_t snapshots = 168;
    bool full_year = false;
    std::vector<std::string> styles;
    bool fix_at_full = false;
    // A custom run with given factors instead of the four built-in styles.
    FactorFlags f;
    bool custom = false;
};

SimulationStyle style_from_string(const std::string& s) {
    for (auto st : {SimulationStyle::LinearLineOnly, SimulationStyle::PwlLineOnly, SimulationStyle::PwlIntraInclusive,
                    SimulationStyle::NodalPwl})
        if (s == to_string(st)) return st;
    throw std::invalid_argument("unknown simulation style '" + s + "'");
}

void run_experiment(const ExperimentArgs& a) {
    const auto net = read_case(a.c.case_path);
    const auto snaps = generate_snapshots(net, a.full_year ? 8760 : a.snapshots, a.c.seed);
    std::vector<ScenarioResults> results;
    if (a.custom) {
        ScenarioSetup setup;
        setup.pricing = pricing_from_string(a.f.pricing);
        setup.factors = build_factors(net, setup.pricing, a.f);
        setup.fix_at_full_optimum = a.fix_at_full;
        setup.jobs = a.c.jobs;
        results.push_back(run_scenarios(net, snaps, setup, "custom-" + a.f.pricing));
    } else {
        SimulationOptions opt;
        opt.fix_at_full_optimum = a.fix_at_full;
        opt.jobs = a.c.jobs;
        opt.calibration.seed = a.c.seed;
        const std::vector<std::string> all = {"zonal-linear", "zonal-pwl", "zonal-pwl-intra", "nodal-pwl"};
        for (const auto& s : a.styles.empty() ? all : a.styles) {
            results.push_back(run_simulation(style_from_string(s), net, snaps, opt));
            if (log_level() > 0) std::cerr << s << " done\n";
        }
    }
    write_experiment_csvs(a.c.out, results);
    for (const auto& r : results) {
        std::cout << r.label << " (" << r.included() << " hours, " << r.excluded << " excluded)\n";
        for (const auto& row : savings_table(r))
            std::cout << "  " << std::left << std::setw(10) << to_string(row.config) << std::right << std::fixed
                      << std::setprecision(6) << std::setw(12) << row.total_musd << " M$  negative hours "
                      << row.negative_hours << "\n";
    }
}

// --- report ---------------------------------------------------------------------

// Savings table of an earlier experiment, one row per simulation.
void run_report(const std::string& dir) {
    std::istringstream in(read_file((fs::path(dir) / "savings_table.csv").string(), "savings table"));
    std::string line;
    std::getline(in, line);
    struct Row {
        std::map<std::string, double> total;
        std::map<std::string, std::string> negative;
        std::string hours;
    };
    std::vector<std::string> order;
    std::map<std::string, Row> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        if (f.size() != 8) throw DomainError("malformed savings table row: " + line);
        if (!rows.count(f[0])) order.push_back(f[0]);
        auto& r = rows[f[0]];
        r.total[f[1]] = std::stod(f[2]);
        r.negative[f[1]] = f[4];
        r.hours = f[6];
    }
    const std::vector<std::string> cfg = {"hvdc_only", "ac_only", "both"};
    std::cout << std::left << std::setw(18) << "simulation" << std::right;
    for (const auto& c : cfg) std::cout << std::setw(14) << c;
    std::cout << std::setw(8) << "hours" << "  both>=each  negative hours (hvdc/ac/both)\n";
    for (const auto& name : order) {
        const auto& r = rows[name];
        std::cout << std::left << std::setw(18) << name << std::right << std::fixed << std::setprecision(6);
        for (const auto& c : cfg) std::cout << std::setw(14) << r.total.at(c);
        const bool ok = r.total.at("both") >= r.total.at("hvdc_only") && r.total.at("both") >= r.total.at("ac_only");
        std::cout << std::setw(8) << r.hours << "  " << std::setw(9) << (ok ? "yes" : "no") << "   "
                  << r.negative.at("hvdc_only") << '/' << r.negative.at("ac_only") << '/' << r.negative.at("both")
                  << "\n";
    }
}

void add_common(CLI::App* cmd, Common& c, bool needs_case = true) {
    if (needs_case) cmd->add_option("--case", c.case_path, "case JSON")->required();
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--jobs", c.jobs, "worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market clearing with implicit grid losses"};
    app.require_subcommand(1);
    app.fallthrough();

    ClearArgs clear;
    auto* c = app.add_subcommand("clear", "clear one hour of a case and write dispatch, flows, losses, prices, duals");
    add_common(c, clear.c);
    add_factor_flags(c, clear.f);
    c->add_option("--loss-mode", clear.mode, "none, hvdc, ac or both")
        ->check(CLI::IsMember({"none", "hvdc", "hvdc_only", "ac", "ac_only", "both"}));

    PtdfArgs ptdf;
    auto* p = app.add_subcommand("ptdf", "nodal PTDF, or the regression-estimated zonal PTDF");
    add_common(p, ptdf.c);
    p->add_option("--pricing", ptdf.pricing, "nodal or zonal")->check(CLI::IsMember({"nodal", "zonal"}));
    p->add_option("--patterns", ptdf.patterns, "zonal: generation patterns")->check(CLI::PositiveNumber);

    CalibrateArgs cal;
    cal.c.seed = CalibrationOptions{}.seed;
    auto* k = app.add_subcommand("calibrate", "AC power flow samples and intra-zonal inclusive loss factors");
    add_common(k, cal.c);
    k->add_option("--samples", cal.samples, "samples per direction and zone pair")->check(CLI::PositiveNumber);
    k->add_option("--segments", cal.segments, "pieces per factor")->check(CLI::PositiveNumber);
    k->add_option("--loss-kind", cal.kind, "linear or pwl")->check(CLI::IsMember({"linear", "pwl"}));

    ExperimentArgs exp;
    exp.c.seed = 2024;
    auto* e = app.add_subcommand("experiment", "hourly series under the four loss configurations");
    add_common(e, exp.c);
    e->add_option("--snapshots", exp.snapshots, "hours to simulate")->check(CLI::PositiveNumber);
    e->add_flag("--full-year", exp.full_year, "simulate 8760 hours");
    e->add_option("--style", exp.styles, "zonal-linear, zonal-pwl, zonal-pwl-intra, nodal-pwl (default all)")
        ->check(CLI::IsMember({"zonal-linear", "zonal-pwl", "zonal-pwl-intra", "nodal-pwl"}));
    e->add_flag("--fix-at-full-optimum", exp.fix_at_full,
                "restricted configurations keep the losses of the full one instead of the offline ones");
    auto* pr = e->add_option("--pricing", exp.f.pricing, "custom run: nodal or zonal")
                   ->check(CLI::IsMember({"nodal", "zonal"}));
    auto* kind = e->add_option("--loss-kind", exp.f.kind, "custom run: constant, linear or pwl")
                     ->check(CLI::IsMember({"constant", "linear", "pwl"}));
    auto* tab = e->add_option("--loss-table", exp.f.table, "custom run: loss-factor CSV");
    auto* seg = e->add_option("--segments", exp.f.segments, "custom run: pwl segments")->check(CLI::PositiveNumber);
    auto* mw = e->add_option("--segment-mw", exp.f.segment_mw, "custom run: pwl segment length in MW")
                   ->check(CLI::PositiveNumber);
    seg->excludes(mw);

    std::string report_dir = "out";
    auto* r = app.add_subcommand("report", "summarise savings_table.csv of an earlier experiment");
    r->add_option("--out", report_dir, "experiment output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);  // --help
        app.exit(err);
        return 2;
    }

    try {
        if (*c) run_clear(clear);
        if (*p) run_ptdf(ptdf);
        if (*k) run_calibrate(cal);
        if (*e) {
            exp.custom = *pr || *kind || *tab || *seg || *mw;
            if (exp.custom && !exp.styles.empty()) throw CLI::ValidationError("--style", "not with a custom run");
            run_experiment(exp);
        }
        if (*r) run_report(report_dir);
    } catch (const CLI::Error& err) {
        std::cerr << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
