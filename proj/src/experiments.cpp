#include "lossy/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "lossy/acpf.hpp"
#include "parallel.hpp"

namespace lossy {

// --- snapshots -----------------------------------------------------------------

std::vector<Snapshot> generate_snapshots(const Network& net, std::size_t n_hours, std::uint64_t seed) {
    if (n_hours == 0) throw std::invalid_argument("generate_snapshots: n_hours must be at least 1");
    std::set<std::string> zones;
    for (const auto& b : net.buses()) zones.insert(b.zone);
    std::vector<std::size_t> wind;
    for (std::size_t j = 0; j < net.generators().size(); ++j)
        if (net.generators()[j].wind) wind.push_back(j);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> phase(-1.0, 1.0);

    // Zones peak within an hour of each other; noise is AR(1).
    std::map<std::string, double> shift, noise;
    for (const auto& z : zones) shift[z] = phase(rng), noise[z] = 0.0;
    // Wind: a shared weather state plus a local one per farm, mapped through
    // the normal CDF onto [0, 1].
    double common = n01(rng);
    std::vector<double> local(wind.size());
    for (auto& x : local) x = n01(rng);

    constexpr double kDaily = 0.2, kNoise = 0.02, kLoadAr = 0.8, kWindAr = 0.9;
    const double wind_innov = std::sqrt(1.0 - kWindAr * kWindAr);
    std::vector<Snapshot> out(n_hours);
    for (std::size_t h = 0; h < n_hours; ++h) {
        Snapshot& s = out[h];
        s.hour = h;
        for (const auto& z : zones) {
            noise[z] = kLoadAr * noise[z] + kNoise * std::sqrt(1.0 - kLoadAr * kLoadAr) * n01(rng);
            const double t = 2.0 * std::numbers::pi * (static_cast<double>(h % 24) - 9.0 - shift[z]) / 24.0;
            s.load_scale[z] = std::max(0.0, 1.0 + kDaily * std::sin(t) + noise[z]);
        }
        common = kWindAr * common + wind_innov * n01(rng);
        for (std::size_t k = 0; k < wind.size(); ++k) {
            local[k] = kWindAr * local[k] + wind_innov * n01(rng);
            const double x = std::sqrt(0.6) * common + std::sqrt(0.4) * local[k];
            s.wind[net.generators()[wind[k]].id] = 0.5 * std::erfc(-x / std::numbers::sqrt2);
        }
    }
    return out;
}

Network apply_snapshot(const Network& net, const Snapshot& s) {
    auto gens = net.generators();
    for (auto& g : gens) {
        const auto it = s.wind.find(g.id);
        if (it == s.wind.end()) continue;
        if (!g.wind) throw std::invalid_argument("apply_snapshot: " + g.id + " is not a wind unit");
        g.g_max *= std::clamp(it->second, 0.0, 1.0);
        g.g_min = std::min(g.g_min, g.g_max);
    }
    auto loads = net.loads();
    for (auto& d : loads) {
        const auto& zone = net.buses()[net.bus_index(d.bus)].zone;
        const auto it = s.load_scale.find(zone);
        if (it == s.load_scale.end()) continue;
        if (it->second < 0.0) throw std::invalid_argument("apply_snapshot: negative load scale for zone " + zone);
        d.d_min *= it->second;
        d.d_max *= it->second;
    }
    return net.with_injections(std::move(gens), std::move(loads));
}

const char* to_string(Pricing p) { return p == Pricing::Nodal ? "nodal" : "zonal"; }

Pricing pricing_from_string(const std::string& s) {
    if (s == "nodal") return Pricing::Nodal;
    if (s == "zonal") return Pricing::Zonal;
    throw std::invalid_argument("unknown pricing '" + s + "' (nodal|zonal)");
}

// --- scenario runs ---------------------------------------------------------------

namespace {

struct HourModel {
    Network net;
    std::optional<ZonalNetwork> zn;
    MarketGrid grid;
};

HourModel hour_model(const Network& net, const Snapshot& snap, Pricing pricing) {
    HourModel h{apply_snapshot(net, snap), std::nullopt, {}};
    if (pricing == Pricing::Nodal) {
        h.grid = MarketGrid::nodal(h.net);
    } else {
        h.zn = reduce_to_zonal(h.net, zone_map_of(h.net));
        h.grid = MarketGrid::zonal(*h.zn);
    }
    h.grid.fixed_load.assign(h.grid.nodes.size(), 0.0);  // intra-zonal losses go through LossConfig
    return h;
}

ConfigOutcome summarise(const MarketOutcome& o) {
    ConfigOutcome c;
    c.welfare = o.objective;
    c.generation_cost = o.generation_cost;
    for (std::size_t l = 0; l < o.loss_ac.size(); ++l)
        if (o.ac_loss_variable[l]) c.variable_losses += o.loss_ac[l];
    for (std::size_t k = 0; k < o.loss_dc.size(); ++k)
        if (o.dc_loss_variable[k]) c.variable_losses += o.loss_dc[k];
    for (double v : o.fixed_node) c.fixed_losses += v;
    c.prices = o.prices;
    c.kkt = o.kkt;
    return c;
}

// p̃_intra less what the variable factors already carry at the bootstrap flows.
std::vector<double> credited_intra(const MarketGrid& grid, const MarketOutcome& boot, const LossTable& factors,
                                   std::vector<double> intra, LossMode mode) {
    LossConfig probe;
    probe.mode = mode;
    auto credit = [&](const GridBranch& b, double f) {
        const double c = std::max(0.0, factors.at(b.id).eval(f) - b.loss(f));
        intra[b.from] -= 0.5 * c;
        intra[b.to] -= 0.5 * c;
    };
    if (probe.ac_variable())
        for (std::size_t l = 0; l < grid.ac.size(); ++l) credit(grid.ac[l], boot.f_ac[l]);
    if (probe.dc_variable())
        for (std::size_t k = 0; k < grid.dc.size(); ++k) credit(grid.dc[k], boot.f_dc[k]);
    for (auto& v : intra) v = std::max(0.0, v);
    return intra;
}

// One hour ready to clear: the lossless bootstrap, its offline losses, and
// the fixed-loss placement shared by every configuration.
struct PreparedHour {
    HourModel h;
    MarketOutcome boot;
    LossConfig base;
    std::vector<double> intra;
    double offline_losses = 0.0;
};

PreparedHour prepare_hour(const Network& net, const Snapshot& snap, const ScenarioSetup& setup, const PTDFMatrix& ptdf) {
    PreparedHour p{hour_model(net, snap, setup.pricing), {}, {}, {}, 0.0};
    const auto& h = p.h;
    p.boot = clear_market(h.grid, ptdf, LossConfig{});
    const auto off = losses_from_dispatch(h.net, p.boot, setup.acpf);
    p.base.models = setup.factors;
    p.intra.assign(h.grid.nodes.size(), 0.0);
    if (setup.pricing == Pricing::Zonal) {
        const auto z = aggregate_losses(h.net, *h.zn, off);
        p.base.fixed_branch_losses.insert(z.corridor.begin(), z.corridor.end());
        p.base.fixed_branch_losses.insert(z.hvdc.begin(), z.hvdc.end());
        p.intra = z.intra;
    } else {
        for (std::size_t l = 0; l < off.ac.size(); ++l) p.base.fixed_branch_losses[h.net.ac_lines()[l].id] = off.ac[l];
        for (std::size_t k = 0; k < off.dc.size(); ++k) p.base.fixed_branch_losses[h.net.hvdc_links()[k].id] = off.dc[k];
    }
    for (double v : off.ac) p.offline_losses += v;
    for (double v : off.dc) p.offline_losses += v;
    return p;
}

LossConfig config_for(const PreparedHour& p, const ScenarioSetup& setup, LossMode mode) {
    LossConfig lc = p.base;
    lc.mode = mode;
    lc.fixed_node_losses = setup.factors_include_intra && setup.pricing == Pricing::Zonal
                               ? credited_intra(p.h.grid, p.boot, setup.factors, p.intra, mode)
                               : p.intra;
    return lc;
}

PTDFMatrix setup_ptdf(const Network& net, const ScenarioSetup& setup) {
    const bool zonal = setup.pricing == Pricing::Zonal;
    const PTDFMatrix ptdf = setup.ptdf ? *setup.ptdf
                            : zonal    ? zonal_ptdf_estimate(net, zone_map_of(net), setup.ptdf_sampling, setup.ptdf_seed)
                                       : nodal_ptdf(net);
    if (ptdf.kind != (zonal ? PtdfKind::Zonal : PtdfKind::Nodal))
        throw std::invalid_argument("PTDF kind does not match the pricing mode");
    return ptdf;
}

void check_factors(const MarketGrid& grid, const LossTable& factors) {
    for (const auto& b : grid.ac)
        if (!factors.count(b.id)) throw std::invalid_argument("no loss factor for AC branch " + b.id);
    for (const auto& b : grid.dc)
        if (!factors.count(b.id)) throw std::invalid_argument("no loss factor for HVDC link " + b.id);
}

}  // namespace

ScenarioResults run_scenarios(const Network& net, const std::vector<Snapshot>& snapshots, const ScenarioSetup& setup,
                              std::string label) {
    ScenarioResults r;
    r.label = std::move(label);
    r.pricing = setup.pricing;
    const PTDFMatrix ptdf = setup_ptdf(net, setup);
    {
        const auto grid = hour_model(net, Snapshot{}, setup.pricing).grid;
        r.nodes = grid.nodes;
        check_factors(grid, setup.factors);
    }

    r.snapshots.resize(snapshots.size());
    detail::parallel_for(snapshots.size(), setup.jobs, [&](std::size_t i) {
        const auto& snap = snapshots[i];
        SnapshotResult& res = r.snapshots[i];
        res.hour = snap.hour;
        try {
            const auto p = prepare_hour(net, snap, setup, ptdf);
            res.offline_losses = p.offline_losses;
            res.bootstrap_kkt = p.boot.kkt;
            if (setup.fix_at_full_optimum) {
                const auto full_lc = config_for(p, setup, LossMode::Both);
                const auto full = clear_market(p.h.grid, ptdf, full_lc);
                res.configs[3] = summarise(full);
                for (std::size_t c = 0; c < 3; ++c) {
                    LossConfig lc = full_lc;
                    lc.mode = kConfigs[c];
                    lc.pin_fixed_branches = true;
                    for (std::size_t l = 0; l < full.ac_ids.size(); ++l) lc.fixed_branch_losses[full.ac_ids[l]] = full.loss_ac[l];
                    for (std::size_t k = 0; k < full.dc_ids.size(); ++k) lc.fixed_branch_losses[full.dc_ids[k]] = full.loss_dc[k];
                    res.configs[c] = summarise(clear_market(p.h.grid, ptdf, lc));
                }
            } else {
                for (std::size_t c = 0; c < kConfigs.size(); ++c)
                    res.configs[c] = summarise(clear_market(p.h.grid, ptdf, config_for(p, setup, kConfigs[c])));
            }
            for (std::size_t c = 0; c < kConfigs.size(); ++c) {
                res.delta[c] = res.configs[c].welfare - res.configs[0].welfare;
                res.cost_delta[c] = res.configs[0].generation_cost - res.configs[c].generation_cost;
            }
            res.ok = true;
        } catch (const std::invalid_argument&) {
            throw;  // setup errors are not hour failures
        } catch (const std::exception& e) {
            res.error = e.what();
        }
    });

    for (const auto& s : r.snapshots) {
        if (!s.ok) {
            ++r.excluded;
            continue;
        }
        for (std::size_t c = 0; c < kConfigs.size(); ++c) {
            r.total[c] += s.delta[c];
            r.total_cost[c] += s.cost_delta[c];
            r.negative_hours[c] += s.delta[c] < -kNegativeDeltaTolerance;
        }
    }
    return r;
}

MarketOutcome clear_hour(const Network& net, const Snapshot& snapshot, const ScenarioSetup& setup, LossMode mode) {
    const PTDFMatrix ptdf = setup_ptdf(net, setup);
    check_factors(hour_model(net, Snapshot{}, setup.pricing).grid, setup.factors);
    const auto p = prepare_hour(net, snapshot, setup, ptdf);
    return clear_market(p.h.grid, ptdf, config_for(p, setup, mode));
}

std::vector<SavingsRow> savings_table(const ScenarioResults& r) {
    std::vector<SavingsRow> rows;
    const std::size_t hours = r.included();
    for (std::size_t c = 0; c < kConfigs.size(); ++c) {
        SavingsRow row;
        row.label = r.label;
        row.config = kConfigs[c];
        row.total_musd = r.total[c] / 1e6;
        row.cost_total_musd = r.total_cost[c] / 1e6;
        row.negative_hours = r.negative_hours[c];
        row.negative_share = hours ? static_cast<double>(r.negative_hours[c]) / static_cast<double>(hours) : 0.0;
        row.hours = hours;
        row.excluded = r.excluded;
        rows.push_back(row);
    }
    return rows;
}

// --- loss-factor styles ---------------------------------------------------------------

const char* to_string(SimulationStyle s) {
    switch (s) {
        case SimulationStyle::LinearLineOnly: return "zonal-linear";
        case SimulationStyle::PwlLineOnly: return "zonal-pwl";
        case SimulationStyle::PwlIntraInclusive: return "zonal-pwl-intra";
        case SimulationStyle::NodalPwl: return "nodal-pwl";
    }
    return "?";
}

LossTable line_loss_factors(const Network& net, Pricing pricing, LossKind kind, double segment_mw) {
    if (kind == LossKind::Constant) throw std::invalid_argument("line_loss_factors: kind must be linear or piecewise");
    const auto grid = pricing == Pricing::Nodal ? MarketGrid::nodal(net)
                                                : MarketGrid::zonal(reduce_to_zonal(net, zone_map_of(net)));
    LossTable t;
    auto add = [&](const GridBranch& b) {
        t[b.id] = kind == LossKind::Linear
                      ? fit_linear(b.loss, TwoPoint{0.0, kTwoPointLoading * b.capacity}, b.capacity, b.id)
                      : fit_piecewise_by_length(b.loss, b.capacity, segment_mw / net.base_power(), SegmentFit::Chord,
                                                b.id);
    };
    for (const auto& b : grid.ac) add(b);
    for (const auto& b : grid.dc) add(b);
    return t;
}

CalibratedFactors calibrated_loss_factors(const Network& net, const ZoneMap& zm, const CalibrationOptions& opt) {
    CalibratedFactors out;
    const auto zn = reduce_to_zonal(net, zm);
    for (const auto& c : zn.corridors)
        out.populations[c.id] = interzonal_loss_population(net, zm, zn.zones[c.from_zone], zn.zones[c.to_zone],
                                                           opt.samples, opt.seed, opt.population);
    std::map<std::string, LossPopulation> corridors = out.populations;
    out.system = system_loss_population(net, zm, opt.samples, opt.seed, opt.population);
    out.gamma = correction_factor(net, zm, corridors, out.system);
    for (const auto& c : zn.corridors)
        out.table[c.id] = calibrate_loss_factors(out.populations[c.id].samples, out.gamma.gamma, LossKind::Piecewise,
                                                 c.capacity, opt.segments, CalibrationTarget::TotalLoss, c.id);
    for (const auto& l : zn.hvdc_links) {
        out.populations[l.id] = hvdc_loss_population(net, zm, l.id, opt.samples, opt.seed, opt.population);
        out.table[l.id] = calibrate_loss_factors(out.populations[l.id].samples, 1.0, LossKind::Piecewise, l.capacity,
                                                 opt.segments, CalibrationTarget::TotalLoss, l.id);
    }
    return out;
}

ScenarioResults run_simulation(SimulationStyle style, const Network& net, const std::vector<Snapshot>& snapshots,
                               const SimulationOptions& opt) {
    ScenarioSetup setup;
    setup.fix_at_full_optimum = opt.fix_at_full_optimum;
    switch (style) {
        case SimulationStyle::LinearLineOnly:
            setup.factors = line_loss_factors(net, Pricing::Zonal, LossKind::Linear);
            break;
        case SimulationStyle::PwlLineOnly:
            setup.factors = line_loss_factors(net, Pricing::Zonal, LossKind::Piecewise);
            break;
        case SimulationStyle::PwlIntraInclusive: {
            auto cal = opt.calibration;
            cal.population.jobs = opt.jobs;
            setup.factors = calibrated_loss_factors(net, zone_map_of(net), cal).table;
            setup.factors_include_intra = true;
            break;
        }
        case SimulationStyle::NodalPwl:
            setup.pricing = Pricing::Nodal;
            setup.factors = line_loss_factors(net, Pricing::Nodal, LossKind::Piecewise);
            break;
    }
    if (setup.pricing == Pricing::Zonal) setup.ptdf = opt.zonal_ptdf;
    setup.jobs = opt.jobs;
    return run_scenarios(net, snapshots, setup, to_string(style));
}

// --- output ---------------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f.precision(10);
    return f;
}

}  // namespace

void write_experiment_csvs(const std::filesystem::path& dir, const std::vector<ScenarioResults>& results) {
    std::filesystem::create_directories(dir);
    auto sr = open_csv(dir / "scenario_results.csv");
    sr << "simulation,hour,status,config,welfare_usd,generation_cost_usd,variable_losses_pu,fixed_losses_pu,delta_usd,"
          "cost_delta_usd\n";
    auto dl = open_csv(dir / "deltas.csv");
    dl << "simulation,hour,config,delta_usd\n";
    auto st = open_csv(dir / "savings_table.csv");
    st << "simulation,config,total_musd,cost_total_musd,negative_hours,negative_share,hours,excluded\n";
    for (const auto& r : results) {
        for (const auto& s : r.snapshots) {
            if (!s.ok) {
                std::string msg = s.error;
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                sr << r.label << ',' << s.hour << ",excluded: " << msg << ",,,,,,,\n";
                continue;
            }
            for (std::size_t c = 0; c < kConfigs.size(); ++c) {
                const auto& o = s.configs[c];
                sr << r.label << ',' << s.hour << ",ok," << to_string(kConfigs[c]) << ',' << o.welfare << ','
                   << o.generation_cost << ',' << o.variable_losses << ',' << o.fixed_losses << ',' << s.delta[c]
                   << ',' << s.cost_delta[c] << '\n';
                if (c > 0) dl << r.label << ',' << s.hour << ',' << to_string(kConfigs[c]) << ',' << s.delta[c] << '\n';
            }
        }
        for (const auto& row : savings_table(r))
            st << row.label << ',' << to_string(row.config) << ',' << row.total_musd << ',' << row.cost_total_musd << ','
               << row.negative_hours << ',' << row.negative_share << ',' << row.hours << ',' << row.excluded << '\n';
    }
}

}  // namespace lossy
