#include "lossy/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace lossy {

namespace {

int clearing_log_level() {
    const char* v = std::getenv("LOSSY_CLEARING_LOG");
    return v ? std::atoi(v) : 0;
}

void require_fixed_node_size(const MarketGrid& grid, const std::vector<double>& v, const char* what) {
    if (!v.empty() && v.size() != grid.nodes.size())
        throw ClearingError(std::string(what) + " has " + std::to_string(v.size()) + " entries for " +
                            std::to_string(grid.nodes.size()) + " nodes");
}

const LossModel& model_for(const LossConfig& lc, const GridBranch& br, const char* cls) {
    const auto it = lc.models.find(br.id);
    if (it == lc.models.end())
        throw ClearingError(std::string("no loss model for ") + cls + " branch " + br.id);
    return it->second;
}

}  // namespace

// --- grid views -------------------------------------------------------------

MarketGrid MarketGrid::nodal(const Network& net) {
    MarketGrid g;
    g.kind = PtdfKind::Nodal;
    g.base_power = net.base_power();
    for (const auto& b : net.buses()) g.nodes.push_back(b.id);
    for (const auto& l : net.ac_lines())
        g.ac.push_back({l.id, net.bus_index(l.from), net.bus_index(l.to), l.capacity,
                        QuadraticLoss::resistive(l.resistance)});
    for (const auto& l : net.hvdc_links())
        g.dc.push_back({l.id, net.bus_index(l.from), net.bus_index(l.to), l.capacity, l.loss_params});
    g.generators = net.generators();
    for (const auto& x : g.generators) g.gen_node.push_back(net.bus_index(x.bus));
    g.loads = net.loads();
    for (const auto& x : g.loads) g.load_node.push_back(net.bus_index(x.bus));
    g.fixed_load.assign(g.nodes.size(), 0.0);
    return g;
}

MarketGrid MarketGrid::zonal(const ZonalNetwork& zn) {
    MarketGrid g;
    g.kind = PtdfKind::Zonal;
    g.base_power = zn.base_power;
    g.nodes = zn.zones;
    for (const auto& c : zn.corridors) g.ac.push_back({c.id, c.from_zone, c.to_zone, c.capacity, c.equivalent_loss});
    for (const auto& l : zn.hvdc_links) g.dc.push_back({l.id, l.from_zone, l.to_zone, l.capacity, l.loss_params});
    g.generators = zn.generators;
    for (const auto& x : g.generators) g.gen_node.push_back(zn.zone_index(x.bus));
    g.loads = zn.loads;
    for (const auto& x : g.loads) g.load_node.push_back(zn.zone_index(x.bus));
    g.fixed_load = zn.intra_loss;
    if (g.fixed_load.empty()) g.fixed_load.assign(g.nodes.size(), 0.0);
    return g;
}

std::size_t MarketGrid::node_index(const std::string& id) const {
    const auto it = std::find(nodes.begin(), nodes.end(), id);
    if (it == nodes.end()) throw ClearingError("unknown node " + id);
    return static_cast<std::size_t>(it - nodes.begin());
}

const char* to_string(LossMode mode) {
    switch (mode) {
        case LossMode::None: return "none";
        case LossMode::HvdcOnly: return "hvdc_only";
        case LossMode::AcOnly: return "ac_only";
        case LossMode::Both: return "both";
    }
    return "?";
}

LossMode loss_mode_from_string(const std::string& s) {
    if (s == "none") return LossMode::None;
    if (s == "hvdc" || s == "hvdc_only") return LossMode::HvdcOnly;
    if (s == "ac" || s == "ac_only") return LossMode::AcOnly;
    if (s == "both") return LossMode::Both;
    throw std::invalid_argument("unknown loss mode '" + s + "' (none|hvdc_only|ac_only|both)");
}

// --- LP assembly --------------------------------------------------------------

ClearingProblem build_clearing_problem(const MarketGrid& grid, const PTDFMatrix& ptdf, const LossConfig& lc) {
    const std::size_t n = grid.nodes.size();
    if (ptdf.kind != grid.kind) throw ClearingError("PTDF kind does not match the network kind");
    if (ptdf.cols() != n || ptdf.rows() != grid.ac.size())
        throw ClearingError("PTDF is " + std::to_string(ptdf.rows()) + "x" + std::to_string(ptdf.cols()) +
                            " but the network has " + std::to_string(grid.ac.size()) + " AC branches and " +
                            std::to_string(n) + " nodes");
    for (std::size_t i = 0; i < n; ++i)
        if (ptdf.col_ids[i] != grid.nodes[i]) throw ClearingError("PTDF column " + ptdf.col_ids[i] + " != node " + grid.nodes[i]);
    for (std::size_t l = 0; l < grid.ac.size(); ++l)
        if (ptdf.row_ids[l] != grid.ac[l].id) throw ClearingError("PTDF row " + ptdf.row_ids[l] + " != branch " + grid.ac[l].id);
    if (ptdf.component_of_col.size() != n) throw ClearingError("PTDF lacks component data");
    require_fixed_node_size(grid, grid.fixed_load, "fixed_load");
    require_fixed_node_size(grid, lc.fixed_node_losses, "fixed_node_losses");

    ClearingProblem P;
    auto& lp = P.lp;
    const double base = grid.base_power;
    P.component_of_node = ptdf.component_of_col;
    std::size_t ncomp = 0;
    for (auto c : P.component_of_node) ncomp = std::max(ncomp, c + 1);

    // Which branches carry an LP loss variable, and the fixed value of the others.
    const bool ac_var = lc.ac_variable(), dc_var = lc.dc_variable();
    auto fixed_value = [&](const GridBranch& br) {
        const auto it = lc.fixed_branch_losses.find(br.id);
        return it == lc.fixed_branch_losses.end() ? 0.0 : it->second;
    };
    P.fixed_ac.assign(grid.ac.size(), 0.0);
    P.fixed_dc.assign(grid.dc.size(), 0.0);
    P.fixed_node.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        P.fixed_node[i] = grid.fixed_load[i] + (lc.fixed_node_losses.empty() ? 0.0 : lc.fixed_node_losses[i]);

    for (std::size_t j = 0; j < grid.generators.size(); ++j) {
        const auto& g = grid.generators[j];
        P.g_var.push_back(lp.add_variable("g_" + g.id, g.g_min, g.g_max, -g.cost * base));
    }
    for (std::size_t j = 0; j < grid.loads.size(); ++j) {
        const auto& d = grid.loads[j];
        P.d_var.push_back(lp.add_variable("d_" + d.id, d.d_min, d.d_max, d.utility * base));
    }
    for (const auto& br : grid.dc) P.fdc_var.push_back(lp.add_variable("fdc_" + br.id, -br.capacity, br.capacity, 0.0));

    auto add_loss_vars = [&](const std::vector<GridBranch>& branches, bool variable, const char* prefix,
                             std::vector<std::optional<std::size_t>>& vars, std::vector<double>& fixed) {
        for (std::size_t l = 0; l < branches.size(); ++l) {
            const auto& br = branches[l];
            if (variable) {
                model_for(lc, br, prefix);
                vars.push_back(lp.add_variable(std::string("ploss_") + prefix + "_" + br.id, -lp::kInf, lp::kInf, 0.0));
            } else if (lc.pin_fixed_branches) {
                if (lc.models.find(br.id) == lc.models.end())
                    throw ClearingError(std::string("pinned ") + prefix + " branch " + br.id + " needs a loss model");
                const double v = fixed_value(br);
                fixed[l] = v;
                vars.push_back(lp.add_variable(std::string("ploss_") + prefix + "_" + br.id, v, v, 0.0));
            } else {
                const double v = fixed_value(br);
                fixed[l] = v;
                vars.push_back(std::nullopt);
                P.fixed_node[br.from] += 0.5 * v;
                P.fixed_node[br.to] += 0.5 * v;
            }
        }
    };
    add_loss_vars(grid.ac, ac_var, "ac", P.loss_ac_var, P.fixed_ac);
    add_loss_vars(grid.dc, dc_var, "dc", P.loss_dc_var, P.fixed_dc);
    for (const auto& br : grid.ac) P.fac_var.push_back(lp.add_variable("fac_" + br.id, -br.capacity, br.capacity, 0.0));

    // Net variable injection at each node as a list of terms.
    std::vector<std::vector<lp::Term>> inj(n);
    for (std::size_t j = 0; j < P.g_var.size(); ++j) inj[grid.gen_node[j]].push_back({P.g_var[j], 1.0});
    for (std::size_t j = 0; j < P.d_var.size(); ++j) inj[grid.load_node[j]].push_back({P.d_var[j], -1.0});
    for (std::size_t l = 0; l < grid.dc.size(); ++l) {
        inj[grid.dc[l].from].push_back({P.fdc_var[l], -1.0});
        inj[grid.dc[l].to].push_back({P.fdc_var[l], 1.0});
    }
    auto withdraw_loss = [&](const std::vector<GridBranch>& branches, const std::vector<std::optional<std::size_t>>& vars) {
        for (std::size_t l = 0; l < branches.size(); ++l) {
            if (!vars[l]) continue;
            inj[branches[l].from].push_back({*vars[l], -0.5});
            inj[branches[l].to].push_back({*vars[l], -0.5});
        }
    };
    withdraw_loss(grid.ac, P.loss_ac_var);
    withdraw_loss(grid.dc, P.loss_dc_var);

    // Balance per synchronous component.
    {
        std::vector<std::vector<lp::Term>> rows(ncomp);
        std::vector<double> rhs(ncomp, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = P.component_of_node[i];
            for (const auto& t : inj[i]) rows[c].push_back(t);
            rhs[c] += P.fixed_node[i];
        }
        for (std::size_t c = 0; c < ncomp; ++c) {
            // Merge duplicate variables (e.g. both halves of a loss in one component).
            std::map<std::size_t, double> merged;
            for (const auto& t : rows[c]) merged[t.var] += t.coef;
            std::vector<lp::Term> terms;
            for (const auto& [v, a] : merged)
                if (a != 0.0) terms.push_back({v, a});
            P.balance_row.push_back(lp.add_constraint("balance_" + std::to_string(c), terms, lp::Relation::Equal, rhs[c]));
        }
    }

    // f_l - PTDF_l * (variable injection) = -PTDF_l * fixed withdrawal
    for (std::size_t l = 0; l < grid.ac.size(); ++l) {
        const auto row = ptdf.values.row(static_cast<Eigen::Index>(l));
        std::map<std::size_t, double> merged;
        merged[P.fac_var[l]] = 1.0;
        double rhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = row[static_cast<Eigen::Index>(i)];
            if (p == 0.0) continue;
            for (const auto& t : inj[i]) merged[t.var] -= p * t.coef;
            rhs -= p * P.fixed_node[i];
        }
        std::vector<lp::Term> terms;
        for (const auto& [v, a] : merged)
            if (std::abs(a) > 1e-14) terms.push_back({v, a});
        P.flow_row.push_back(lp.add_constraint("flow_" + grid.ac[l].id, terms, lp::Relation::Equal, rhs));
    }

    // p_l >= sign * alpha * f_l + beta
    auto add_epigraph = [&](const std::vector<GridBranch>& branches, const std::vector<std::optional<std::size_t>>& vars,
                            const std::vector<std::size_t>& flow_vars, bool hvdc) {
        for (std::size_t l = 0; l < branches.size(); ++l) {
            if (!vars[l]) continue;
            for (const auto& r : epigraph_constraints(lc.models.at(branches[l].id))) {
                std::vector<lp::Term> terms{{*vars[l], 1.0}};
                if (r.alpha != 0.0) terms.push_back({flow_vars[l], -r.sign * r.alpha});
                const auto row = lp.add_constraint(r.dual_label, terms, lp::Relation::GreaterEqual, r.beta);
                P.epigraph.push_back({hvdc, l, r, row});
            }
        }
    };
    add_epigraph(grid.ac, P.loss_ac_var, P.fac_var, false);
    add_epigraph(grid.dc, P.loss_dc_var, P.fdc_var, true);
    return P;
}

// --- solving and pricing ---------------------------------------------------

double MarketOutcome::balance_residual() const {
    double r = 0.0;
    for (double v : g) r += v;
    for (double v : d) r -= v;
    for (std::size_t l = 0; l < loss_ac.size(); ++l)
        if (ac_loss_variable[l]) r -= loss_ac[l];
    for (std::size_t l = 0; l < loss_dc.size(); ++l)
        if (dc_loss_variable[l]) r -= loss_dc[l];
    for (double v : fixed_node) r -= v;
    return r;
}

std::vector<double> compute_prices(const MarketOutcome& o, const PTDFMatrix& ptdf, const LossConfig&) {
    if (o.lambda.empty() || o.mu_lower.size() != o.ac_ids.size())
        throw ClearingError("outcome carries no duals");
    // Aggregate shadow value of flow on each AC branch: congestion plus loss slope terms.
    std::vector<double> pi(o.ac_ids.size(), 0.0);
    for (std::size_t l = 0; l < pi.size(); ++l) pi[l] = o.mu_lower[l] - o.mu_upper[l];
    for (const auto& s : o.sigma)
        if (!s.hvdc) pi[s.branch] -= s.sign * s.alpha * s.value;
    std::vector<double> prices(o.nodes.size());
    for (std::size_t i = 0; i < prices.size(); ++i) {
        double p = o.lambda[o.component_of_node[i]];
        for (std::size_t l = 0; l < pi.size(); ++l) p += ptdf.values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) * pi[l];
        prices[i] = p;
    }
    return prices;
}

MarketOutcome clear_market(const MarketGrid& grid, const PTDFMatrix& ptdf, const LossConfig& lc) {
    const auto P = build_clearing_problem(grid, ptdf, lc);
    const int log = clearing_log_level();
    if (log >= 2) std::cerr << lp::to_lp_format(P.lp);
    const auto sol = lp::solve_lp(P.lp);
    if (sol.status != lp::Status::Optimal) {
        std::ostringstream msg;
        msg << "market clearing " << lp::to_string(sol.status) << " (mode " << to_string(lc.mode) << ")";
        if (sol.status == lp::Status::Infeasible) {
            std::vector<double> gmax(P.balance_row.size(), 0.0), need(P.balance_row.size(), 0.0);
            for (std::size_t j = 0; j < grid.generators.size(); ++j) gmax[P.component_of_node[grid.gen_node[j]]] += grid.generators[j].g_max;
            for (std::size_t j = 0; j < grid.loads.size(); ++j) need[P.component_of_node[grid.load_node[j]]] += grid.loads[j].d_min;
            for (std::size_t i = 0; i < grid.nodes.size(); ++i) need[P.component_of_node[i]] += P.fixed_node[i];
            msg << "; binding candidates:";
            for (std::size_t c = 0; c < gmax.size(); ++c)
                msg << " component " << c << " min withdrawal " << need[c] * grid.base_power << " MW vs generation "
                    << gmax[c] * grid.base_power << " MW;";
            for (const auto& br : grid.ac) msg << " " << br.id << " (" << br.capacity * grid.base_power << " MW)";
            for (const auto& br : grid.dc) msg << " " << br.id << " (" << br.capacity * grid.base_power << " MW)";
        }
        throw ClearingError(msg.str());
    }

    const double base = grid.base_power;
    MarketOutcome o;
    o.nodes = grid.nodes;
    o.component_of_node = P.component_of_node;
    o.base_power = base;
    o.mode = lc.mode;
    for (const auto& br : grid.ac) {
        o.ac_ids.push_back(br.id);
        o.ac_ends.emplace_back(br.from, br.to);
        o.ac_capacity.push_back(br.capacity);
    }
    for (const auto& br : grid.dc) {
        o.dc_ids.push_back(br.id);
        o.dc_ends.emplace_back(br.from, br.to);
        o.dc_capacity.push_back(br.capacity);
    }
    for (const auto& x : grid.generators) o.gen_ids.push_back(x.id);
    for (const auto& x : grid.loads) o.load_ids.push_back(x.id);
    for (auto v : P.g_var) o.g.push_back(sol.x[v]);
    for (auto v : P.d_var) o.d.push_back(sol.x[v]);
    for (auto v : P.fac_var) o.f_ac.push_back(sol.x[v]);
    for (auto v : P.fdc_var) o.f_dc.push_back(sol.x[v]);
    for (std::size_t l = 0; l < grid.ac.size(); ++l) {
        o.ac_loss_variable.push_back(P.loss_ac_var[l].has_value());
        o.loss_ac.push_back(P.loss_ac_var[l] ? sol.x[*P.loss_ac_var[l]] : P.fixed_ac[l]);
    }
    for (std::size_t l = 0; l < grid.dc.size(); ++l) {
        o.dc_loss_variable.push_back(P.loss_dc_var[l].has_value());
        o.loss_dc.push_back(P.loss_dc_var[l] ? sol.x[*P.loss_dc_var[l]] : P.fixed_dc[l]);
    }
    o.fixed_node = P.fixed_node;
    for (std::size_t j = 0; j < grid.generators.size(); ++j) o.generation_cost += grid.generators[j].cost * o.g[j] * base;
    o.objective = sol.objective;
    o.kkt = sol.kkt;
    o.iterations = sol.iterations;

    // Duals are d(objective $/h)/d(rhs p.u.); divide by base for $/MWh.
    for (auto r : P.balance_row) o.lambda.push_back(-sol.duals[r] / base);
    for (auto v : P.fac_var) {
        const double rc = sol.reduced_costs[v] / base;
        o.mu_upper.push_back(rc > 0 ? rc : 0.0);
        o.mu_lower.push_back(rc < 0 ? -rc : 0.0);
    }
    for (const auto& e : P.epigraph)
        o.sigma.push_back({e.row.dual_label, e.hvdc, e.branch, e.row.segment, e.row.sign, e.row.alpha,
                           -sol.duals[e.lp_row] / base});
    o.prices = compute_prices(o, ptdf, lc);

    // Cross-check against the direct sensitivity of the objective to a fixed
    // withdrawal at each node (balance row plus every flow row it enters).
    for (std::size_t i = 0; i < o.nodes.size(); ++i) {
        double dw = sol.duals[P.balance_row[o.component_of_node[i]]];
        for (std::size_t l = 0; l < P.flow_row.size(); ++l)
            dw -= sol.duals[P.flow_row[l]] * ptdf.values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i));
        const double generic = -dw / base;
        if (std::abs(generic - o.prices[i]) > 1e-6 * std::max(1.0, std::abs(generic)))
            throw ClearingError("price reconstruction mismatch at node " + o.nodes[i] + ": " +
                                std::to_string(o.prices[i]) + " vs " + std::to_string(generic));
    }
    if (log >= 1)
        std::cerr << "clear_market mode=" << to_string(lc.mode) << " vars=" << P.lp.num_variables()
                  << " rows=" << P.lp.num_constraints() << " iters=" << sol.iterations
                  << " welfare=" << o.objective << " kkt=" << o.kkt.worst() << "\n";
    return o;
}

double social_welfare(const MarketOutcome& o) { return o.objective; }

// --- diagnostics -------------------------------------------------------------

LossDiagnostics check_artificial_losses(const MarketOutcome& o, const LossConfig& lc, double tol) {
    LossDiagnostics diag;
    diag.min_average_price = INFINITY;
    auto visit = [&](bool hvdc) {
        const auto& ids = hvdc ? o.dc_ids : o.ac_ids;
        const auto& ends = hvdc ? o.dc_ends : o.ac_ends;
        const auto& var = hvdc ? o.dc_loss_variable : o.ac_loss_variable;
        const auto& flow = hvdc ? o.f_dc : o.f_ac;
        const auto& loss = hvdc ? o.loss_dc : o.loss_ac;
        for (std::size_t l = 0; l < ids.size(); ++l) {
            if (!var[l]) continue;
            LineDiagnostic ld;
            ld.id = ids[l];
            ld.hvdc = hvdc;
            ld.average_price = 0.5 * (o.prices[ends[l].first] + o.prices[ends[l].second]);
            for (const auto& s : o.sigma)
                if (s.hvdc == hvdc && s.branch == l) ld.sigma_sum += s.value;
            ld.stationarity_residual = std::abs(ld.average_price - ld.sigma_sum);
            const auto it = lc.models.find(ids[l]);
            if (it != lc.models.end()) ld.excess_loss = loss[l] - it->second.epigraph_value(flow[l]);
            ld.artificial = ld.excess_loss > tol;
            diag.max_stationarity_residual = std::max(diag.max_stationarity_residual, ld.stationarity_residual);
            diag.max_excess_loss = std::max(diag.max_excess_loss, ld.excess_loss);
            diag.min_average_price = std::min(diag.min_average_price, ld.average_price);
            if (ld.artificial)
                diag.artificial.push_back(ld.id + (ld.average_price < -1e-9  ? " (negative average price)"
                                                   : ld.average_price <= 1e-9 ? " (zero average price)"
                                                                               : " (positive average price)"));
            diag.lines.push_back(ld);
        }
    };
    visit(false);
    visit(true);
    if (diag.lines.empty()) diag.min_average_price = 0.0;
    return diag;
}

double binding_alpha(const MarketOutcome& o, std::size_t link, const LossModel& model) {
    // Solver noise around a breakpoint must not flip the reported segment.
    const double f = std::abs(o.f_dc.at(link));
    for (std::size_t k = 0; k + 1 < model.segments.size(); ++k)
        if (std::abs(f - model.segments[k].f_star) <= 1e-7) return model.segments[k].alpha;
    return model.segments[model.segment_at(f)].alpha;
}

std::optional<double> price_ratio_residual(const MarketOutcome& o, std::size_t link, const LossModel& model) {
    const double f = o.f_dc.at(link);
    const double tol = 1e-7;
    if (std::abs(f) <= tol || std::abs(f) >= o.dc_capacity[link] - tol) return std::nullopt;
    // At a breakpoint the slope lies anywhere between the adjacent segments.
    for (std::size_t k = 0; k + 1 < model.segments.size(); ++k)
        if (std::abs(std::abs(f) - model.segments[k].f_star) <= tol) return std::nullopt;
    const double a = binding_alpha(o, link, model);
    const auto [from, to] = o.dc_ends[link];
    const double up = o.prices[f > 0 ? from : to];
    const double down = o.prices[f > 0 ? to : from];
    const double expect = up * (1 + 0.5 * a) / (1 - 0.5 * a);
    return std::abs(down - expect) / std::max(std::abs(expect), 1e-12);
}

// --- export -----------------------------------------------------------------------

void write_outcome_csvs(const std::filesystem::path& dir, const std::vector<SnapshotOutcome>& outcomes) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name, const char* header) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out.precision(12);
        out << header << "\n";
        return out;
    };
    auto dispatch = open("dispatch.csv", "snapshot,config,kind,id,node,mw");
    auto flows = open("flows.csv", "snapshot,config,kind,id,from,to,mw,capacity_mw");
    auto losses = open("losses.csv", "snapshot,config,kind,id,mw,variable");
    auto prices = open("prices.csv", "snapshot,config,node,component,price");
    prices << std::fixed << std::setprecision(4);  // $/MWh
    auto duals = open("duals.csv", "snapshot,config,name,value");
    for (const auto& so : outcomes) {
        const auto& o = so.outcome;
        const double b = o.base_power;
        const std::string pre = std::to_string(so.snapshot) + "," + so.label + ",";
        for (std::size_t j = 0; j < o.g.size(); ++j) dispatch << pre << "gen," << o.gen_ids[j] << ",," << o.g[j] * b << "\n";
        for (std::size_t j = 0; j < o.d.size(); ++j) dispatch << pre << "load," << o.load_ids[j] << ",," << o.d[j] * b << "\n";
        for (std::size_t l = 0; l < o.f_ac.size(); ++l)
            flows << pre << "ac," << o.ac_ids[l] << "," << o.nodes[o.ac_ends[l].first] << "," << o.nodes[o.ac_ends[l].second]
                  << "," << o.f_ac[l] * b << "," << o.ac_capacity[l] * b << "\n";
        for (std::size_t l = 0; l < o.f_dc.size(); ++l)
            flows << pre << "hvdc," << o.dc_ids[l] << "," << o.nodes[o.dc_ends[l].first] << "," << o.nodes[o.dc_ends[l].second]
                  << "," << o.f_dc[l] * b << "," << o.dc_capacity[l] * b << "\n";
        for (std::size_t l = 0; l < o.loss_ac.size(); ++l)
            losses << pre << "ac," << o.ac_ids[l] << "," << o.loss_ac[l] * b << "," << (o.ac_loss_variable[l] ? 1 : 0) << "\n";
        for (std::size_t l = 0; l < o.loss_dc.size(); ++l)
            losses << pre << "hvdc," << o.dc_ids[l] << "," << o.loss_dc[l] * b << "," << (o.dc_loss_variable[l] ? 1 : 0) << "\n";
        for (std::size_t i = 0; i < o.fixed_node.size(); ++i)
            if (o.fixed_node[i] != 0.0) losses << pre << "fixed," << o.nodes[i] << "," << o.fixed_node[i] * b << ",0\n";
        for (std::size_t i = 0; i < o.prices.size(); ++i)
            prices << pre << o.nodes[i] << "," << o.component_of_node[i] << "," << o.prices[i] << "\n";
        for (std::size_t c = 0; c < o.lambda.size(); ++c) duals << pre << "lambda[" << c << "]," << o.lambda[c] << "\n";
        for (std::size_t l = 0; l < o.mu_lower.size(); ++l) {
            duals << pre << "mu_lower[" << o.ac_ids[l] << "]," << o.mu_lower[l] << "\n";
            duals << pre << "mu_upper[" << o.ac_ids[l] << "]," << o.mu_upper[l] << "\n";
        }
        for (const auto& s : o.sigma) duals << pre << s.label << "," << s.value << "\n";
    }
}

}  // namespace lossy
