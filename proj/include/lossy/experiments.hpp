#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lossy/calibration.hpp"
#include "lossy/clearing.hpp"
#include "lossy/ptdf.hpp"

namespace lossy {

/// One market hour: load scale per zone and availability per wind unit.
struct Snapshot {
    std::size_t hour = 0;
    std::map<std::string, double> load_scale;  // zone id -> scale >= 0
    std::map<std::string, double> wind;        // generator id -> [0, 1]
};

/// Diurnal load (+-20% around the case loads, small per-zone noise) and
/// autocorrelated wind; deterministic in `seed`.
std::vector<Snapshot> generate_snapshots(const Network& net, std::size_t n_hours, std::uint64_t seed);

/// Case with load limits scaled and wind capacity derated for one hour.
Network apply_snapshot(const Network& net, const Snapshot& snapshot);

enum class Pricing { Nodal, Zonal };
const char* to_string(Pricing p);
Pricing pricing_from_string(const std::string& s);

inline constexpr std::array<LossMode, 4> kConfigs = {LossMode::None, LossMode::HvdcOnly, LossMode::AcOnly,
                                                     LossMode::Both};

struct ScenarioSetup {
    Pricing pricing = Pricing::Zonal;
    LossTable factors;  // AC lines (nodal) or corridors (zonal), plus HVDC links
    /// Zonal factors that already include intra-zonal losses caused by their
    /// flows: for every variable branch, the part of its factor above its own
    /// loss at the bootstrap flow is taken off the neighbouring zones' p̃_intra.
    bool factors_include_intra = false;
    /// Restricted problems fix their losses at the full problem's optimum
    /// (pinned, epigraph kept) instead of the offline bootstrap.
    bool fix_at_full_optimum = false;
    std::optional<PTDFMatrix> ptdf;  // computed (nodal) or estimated (zonal) when empty
    SamplingConfig ptdf_sampling;
    std::uint64_t ptdf_seed = 1;
    AcpfOptions acpf;
    std::size_t jobs = 0;  // snapshot workers; 0 = hardware concurrency
};

struct ConfigOutcome {
    double welfare = 0.0;          // $/h, objective of the clearing
    double generation_cost = 0.0;  // $/h
    double variable_losses = 0.0;  // p.u.
    double fixed_losses = 0.0;     // p.u.
    std::vector<double> prices;    // $/MWh per node
    lp::KktReport kkt;
};

struct SnapshotResult {
    std::size_t hour = 0;
    bool ok = false;
    std::string error;  // why the hour was excluded
    double offline_losses = 0.0;  // p.u., bootstrap AC + HVDC
    lp::KktReport bootstrap_kkt;
    std::array<ConfigOutcome, 4> configs;
    std::array<double, 4> delta{};       // welfare - welfare(none), $/h
    std::array<double, 4> cost_delta{};  // generation cost(none) - cost, $/h
};

struct ScenarioResults {
    std::string label;
    Pricing pricing = Pricing::Zonal;
    std::vector<std::string> nodes;
    std::vector<SnapshotResult> snapshots;
    std::array<double, 4> total{};       // $, sum of hourly deltas over included hours
    std::array<double, 4> total_cost{};  // $
    std::array<std::size_t, 4> negative_hours{};
    std::size_t excluded = 0;

    std::size_t included() const { return snapshots.size() - excluded; }
};

/// Per hour: clear without losses, replay the dispatch through the AC power
/// flow for offline losses, then clear the four configurations with those
/// fixed where the configuration does not model them. Hours that fail are
/// recorded and left out of the totals.
ScenarioResults run_scenarios(const Network& net, const std::vector<Snapshot>& snapshots, const ScenarioSetup& setup,
                              std::string label = {});

/// One configuration of one hour, with the same offline losses as run_scenarios.
MarketOutcome clear_hour(const Network& net, const Snapshot& snapshot, const ScenarioSetup& setup, LossMode mode);

inline constexpr double kNegativeDeltaTolerance = 1e-3;  // $/h

struct SavingsRow {
    std::string label;
    LossMode config = LossMode::None;
    double total_musd = 0.0;       // M$
    double cost_total_musd = 0.0;  // M$
    std::size_t negative_hours = 0;
    double negative_share = 0.0;   // fraction of included hours
    std::size_t hours = 0;
    std::size_t excluded = 0;
};

std::vector<SavingsRow> savings_table(const ScenarioResults& results);

// --- loss-factor styles --------------------------------------------------------

enum class SimulationStyle { LinearLineOnly, PwlLineOnly, PwlIntraInclusive, NodalPwl };
const char* to_string(SimulationStyle s);

inline constexpr double kTwoPointLoading = 0.6;  // second fit point, fraction of capacity
inline constexpr double kSegmentMw = 60.0;

/// Factors from each branch's own quadratic: linear through no-flow and 60%
/// loading, or chords on segments of `segment_mw`.
LossTable line_loss_factors(const Network& net, Pricing pricing, LossKind kind, double segment_mw = kSegmentMw);

struct CalibrationOptions {
    std::size_t samples = 200;  // per direction and pair
    std::uint64_t seed = 7;
    std::size_t segments = 10;
    PopulationOptions population;
};

struct CalibratedFactors {
    LossTable table;  // corridors and HVDC links
    CorrectionFactor gamma;
    std::map<std::string, LossPopulation> populations;  // corridor or link id
    LossPopulation system;
};

/// Intra-zonal inclusive piecewise factors: pairwise populations per corridor
/// and HVDC link, gamma from the whole-system population (applied to the
/// corridors), K-segment fits.
CalibratedFactors calibrated_loss_factors(const Network& net, const ZoneMap& zone_map,
                                          const CalibrationOptions& options = {});

struct SimulationOptions {
    CalibrationOptions calibration;
    bool fix_at_full_optimum = false;
    std::optional<PTDFMatrix> zonal_ptdf;
    std::size_t jobs = 0;  // workers for snapshots and calibration samples
};

ScenarioResults run_simulation(SimulationStyle style, const Network& net, const std::vector<Snapshot>& snapshots,
                               const SimulationOptions& options = {});

/// scenario_results.csv, savings_table.csv and deltas.csv.
void write_experiment_csvs(const std::filesystem::path& dir, const std::vector<ScenarioResults>& results);

}  // namespace lossy
