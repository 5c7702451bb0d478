#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lossy/lossmodels.hpp"
#include "lossy/lp.hpp"
#include "lossy/network.hpp"
#include "lossy/ptdf.hpp"

namespace lossy {

class ClearingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A branch of the market model: an AC line or corridor (PTDF-governed) or
/// an HVDC link (controllable). Node indices refer to MarketGrid::nodes.
struct GridBranch {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    double capacity = 0.0;
    QuadraticLoss loss;
};

/// Common view of a nodal Network or a ZonalNetwork for the clearing LP.
struct MarketGrid {
    PtdfKind kind = PtdfKind::Nodal;
    double base_power = 100.0;
    std::vector<std::string> nodes;
    std::vector<GridBranch> ac;
    std::vector<GridBranch> dc;
    std::vector<Generator> generators;
    std::vector<std::size_t> gen_node;
    std::vector<Load> loads;
    std::vector<std::size_t> load_node;
    std::vector<double> fixed_load;  // p.u. per node, e.g. zonal intra-zonal losses

    static MarketGrid nodal(const Network& net);
    static MarketGrid zonal(const ZonalNetwork& zn);

    std::size_t node_index(const std::string& id) const;
};

enum class LossMode { None, HvdcOnly, AcOnly, Both };

const char* to_string(LossMode mode);
/// Accepts none|hvdc|hvdc_only|ac|ac_only|both.
LossMode loss_mode_from_string(const std::string& s);

struct LossConfig {
    LossMode mode = LossMode::None;
    LossTable models;  // keyed by branch id; required for variable-class branches
    /// Offline losses of fixed-class branches (p.u.), placed half at each end.
    /// Branches absent from the map contribute zero.
    std::map<std::string, double> fixed_branch_losses;
    /// Additional fixed nodal losses (p.u.), e.g. intra-zonal p̃; empty means zero.
    std::vector<double> fixed_node_losses;
    /// Restricted form used for welfare dominance: fixed-class losses become
    /// variables pinned at their fixed value and keep their epigraph rows.
    bool pin_fixed_branches = false;

    bool ac_variable() const { return mode == LossMode::AcOnly || mode == LossMode::Both; }
    bool dc_variable() const { return mode == LossMode::HvdcOnly || mode == LossMode::Both; }
};

struct EpigraphRef {
    bool hvdc = false;
    std::size_t branch = 0;
    EpigraphRow row;
    std::size_t lp_row = 0;
};

/// The assembled LP with the index maps needed to read the solution back.
struct ClearingProblem {
    lp::LinearProgram lp{lp::Sense::Maximize};
    std::vector<std::size_t> g_var, d_var, fdc_var, fac_var;
    std::vector<std::optional<std::size_t>> loss_ac_var, loss_dc_var;
    std::vector<std::size_t> balance_row;  // per synchronous component
    std::vector<std::size_t> flow_row;     // per AC branch
    std::vector<EpigraphRef> epigraph;
    std::vector<std::size_t> component_of_node;
    std::vector<double> fixed_ac, fixed_dc;  // p.u., fixed-class branch losses
    std::vector<double> fixed_node;          // p.u., total fixed withdrawal per node

    /// Decision variables of the market model; AC flow variables are auxiliary
    /// (they only name the PTDF expression) and are not counted.
    std::size_t structural_variables() const { return lp.num_variables() - fac_var.size(); }
};

ClearingProblem build_clearing_problem(const MarketGrid& grid, const PTDFMatrix& ptdf, const LossConfig& lc);

struct EpigraphDual {
    std::string label;  // sigma+[k,line] / sigma-[k,line]
    bool hvdc = false;
    std::size_t branch = 0;
    std::size_t segment = 0;
    int sign = 1;
    double alpha = 0.0;
    double value = 0.0;  // $/MWh, >= 0
};

struct MarketOutcome {
    std::vector<std::string> nodes, ac_ids, dc_ids, gen_ids, load_ids;
    std::vector<std::size_t> component_of_node;
    std::vector<std::pair<std::size_t, std::size_t>> ac_ends, dc_ends;
    std::vector<double> ac_capacity, dc_capacity;
    double base_power = 100.0;
    LossMode mode = LossMode::None;

    std::vector<double> g, d;             // p.u.
    std::vector<double> f_ac, f_dc;       // p.u.
    std::vector<double> loss_ac, loss_dc; // p.u., variable or fixed value
    std::vector<bool> ac_loss_variable, dc_loss_variable;
    std::vector<double> fixed_node;       // p.u.
    std::vector<double> lambda;           // $/MWh per component
    std::vector<double> mu_lower, mu_upper;  // $/MWh per AC branch
    std::vector<EpigraphDual> sigma;
    std::vector<double> prices;           // $/MWh per node
    double objective = 0.0;               // $/h
    double generation_cost = 0.0;         // $/h
    lp::KktReport kkt;
    std::size_t iterations = 0;

    double balance_residual() const;
};

/// Builds, solves and prices. Infeasible or unbounded programs raise
/// ClearingError with a diagnostic.
MarketOutcome clear_market(const MarketGrid& grid, const PTDFMatrix& ptdf, const LossConfig& lc);

/// LMP per node in $/MWh: lambda of the node's component plus the PTDF-weighted
/// congestion terms and, for variable AC losses, alpha-weighted epigraph terms.
std::vector<double> compute_prices(const MarketOutcome& outcome, const PTDFMatrix& ptdf, const LossConfig& lc);

struct LineDiagnostic {
    std::string id;
    bool hvdc = false;
    double average_price = 0.0;        // $/MWh
    double sigma_sum = 0.0;            // $/MWh
    double stationarity_residual = 0.0;
    double excess_loss = 0.0;          // p.u., loss minus its linearised value
    bool artificial = false;
};

struct LossDiagnostics {
    std::vector<LineDiagnostic> lines;  // variable-loss branches only
    double max_stationarity_residual = 0.0;
    double max_excess_loss = 0.0;
    double min_average_price = 0.0;
    std::vector<std::string> artificial;  // ids with excess > tolerance

    bool any_artificial() const { return !artificial.empty(); }
};

LossDiagnostics check_artificial_losses(const MarketOutcome& outcome, const LossConfig& lc,
                                        double exactness_tolerance = 1e-6);

/// Slope of the segment carrying an HVDC link's flow; at a breakpoint (within
/// 1e-7) the lower segment's.
double binding_alpha(const MarketOutcome& outcome, std::size_t link, const LossModel& model);

/// Relative residual of downstream = upstream * (1 + a/2) / (1 - a/2); nullopt
/// when the link is idle, at capacity or sitting on a breakpoint.
std::optional<double> price_ratio_residual(const MarketOutcome& outcome, std::size_t link, const LossModel& model);

/// Utility of served demand minus generation cost, $/h.
double social_welfare(const MarketOutcome& outcome);

struct SnapshotOutcome {
    std::size_t snapshot = 0;
    std::string label;  // configuration name, may be empty
    MarketOutcome outcome;
};

/// dispatch.csv, flows.csv, losses.csv, prices.csv and duals.csv.
void write_outcome_csvs(const std::filesystem::path& dir, const std::vector<SnapshotOutcome>& outcomes);

}  // namespace lossy
