#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lossy/acpf.hpp"
#include "lossy/lossmodels.hpp"
#include "lossy/network.hpp"

namespace lossy {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One AC power flow in which a single zone exports to another.
struct LossSample {
    std::string exporter, importer;  // zone ids
    std::string corridor;            // corridor (or HVDC link) carrying the exchange, empty if none
    double flow = 0.0;       // p.u., corridor flow oriented exporter -> importer (exchange if no corridor)
    double exchange = 0.0;   // p.u., generation scheduled in the exporting zone
    // Losses are increments over the same network solved with no exchange.
    double loss = 0.0;       // p.u., all AC lines
    double line_loss = 0.0;  // p.u., the corridor's own lines
    std::vector<double> corridor_flows;  // p.u., every corridor, in its own orientation
    std::vector<double> zone_loss;       // p.u., losses on lines inside each zone
    double balance_error = 0.0;  // |net injection - line losses| of the solved flow
    std::uint64_t seed = 0;
};

struct LossPopulation {
    std::vector<LossSample> samples;
    std::size_t attempted = 0;
    std::size_t dropped = 0;  // ACPF divergences
};

struct PopulationOptions {
    double gen_lo = 0.2;  // export level uniform [gen_lo, gen_hi] * zone capacity
    double gen_hi = 1.0;
    double max_drop_rate = 0.10;
    /// Scale all exporting units down when their total capacity exceeds the
    /// rating of the exporting zone's border lines.
    bool limit_to_border = true;
    AcpfOptions acpf;
    std::size_t jobs = 0;  // power-flow workers; 0 = hardware concurrency
};

/// `n` samples in each direction between two zones of one synchronous area.
LossPopulation interzonal_loss_population(const Network& net, const ZoneMap& zone_map, const std::string& zone_a,
                                          const std::string& zone_b, std::size_t n, std::uint64_t seed,
                                          const PopulationOptions& options = {});

/// `n` samples in each direction over one HVDC link: the exporting zone's
/// units feed the sending terminal (up to the link rating) and the importing
/// zone's loads take what arrives. `loss` adds the link's own quadratic loss
/// to the AC increment; `line_loss` is the link loss alone.
LossPopulation hvdc_loss_population(const Network& net, const ZoneMap& zone_map, const std::string& link_id,
                                    std::size_t n, std::uint64_t seed, const PopulationOptions& options = {});

/// `n` samples for every ordered pair of zones sharing a synchronous area,
/// adjacent or not. Sample seeds match the pairwise populations.
LossPopulation system_loss_population(const Network& net, const ZoneMap& zone_map, std::size_t n, std::uint64_t seed,
                                      const PopulationOptions& options = {});

struct CorrectionFactor {
    double gamma = 1.0;        // clipped to (0, 1]
    double raw_gamma = 1.0;    // unclipped ratio fit
    double r_squared = 1.0;
    std::size_t scenarios = 0;
    std::size_t interpolated = 0;  // matches that fell back to interpolation
    std::map<std::string, double> transit;  // ratio over scenarios where the zone is neither end
};

/// Least-squares ratio (through the origin) of whole-system losses to the sum of
/// corridor pair losses looked up at each scenario's corridor flows. Pair
/// losses are matched by nearest |flow| within `match_window`, falling back to
/// linear interpolation through the origin. `pairs` is keyed by corridor id.
CorrectionFactor correction_factor(const Network& net, const ZoneMap& zone_map,
                                   const std::map<std::string, LossPopulation>& pairs, const LossPopulation& system,
                                   double match_window = 0.02);

enum class CalibrationTarget { TotalLoss, LineOnly };

/// Loss factors from a population: a least-squares quadratic in |flow| (all
/// coefficients non-negative) fitted to gamma-scaled losses, then linearised by least
/// squares over [0, capacity] into `segments` pieces (1 means linear).
LossModel calibrate_loss_factors(const std::vector<LossSample>& samples, double gamma, LossKind kind, double capacity,
                                 std::size_t segments = 10, CalibrationTarget target = CalibrationTarget::TotalLoss,
                                 std::string line_id = {});

/// The quadratic surrogate used by calibrate_loss_factors.
QuadraticLoss fit_loss_quadratic(const std::vector<double>& flow, const std::vector<double>& loss);

std::string samples_to_csv(const LossPopulation& population);

}  // namespace lossy
