#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lossy/clearing.hpp"
#include "lossy/network.hpp"

namespace lossy {

/// Newton-Raphson did not converge; carries the max-mismatch history.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Operating point to solve for. Slack buses take their voltage from `v` and
/// ignore p/q; PV buses ignore q.
struct AcpfSetpoints {
    Eigen::VectorXd p;     // net active injection per bus, p.u.
    Eigen::VectorXd q;     // net reactive injection per bus, p.u.
    Eigen::VectorXd v;     // voltage magnitude setpoint, p.u.
    std::vector<bool> pv;  // voltage-controlled buses (slack buses implied)
    /// Buses held at 1.0 p.u. / 0 rad and excluded from the solve; whole
    /// components only. Empty means none.
    std::vector<bool> frozen;
};

struct AcpfOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;  // max |mismatch|, p.u.
    bool trace = false;        // per-iteration mismatch to stderr
};

struct ACPFSolution {
    Eigen::VectorXd vm, va;  // p.u., rad
    std::vector<double> p_from, q_from, p_to, q_to;
    std::vector<double> line_loss;  // p_from + p_to, p.u.
    Eigen::VectorXd p_injection, q_injection;  // solved, including slack
    bool converged = false;
    int iterations = 0;
    std::vector<double> mismatch_history;
    double max_mismatch = 0.0;

    double total_loss() const;
};

ACPFSolution solve_acpf(const Network& net, const AcpfSetpoints& setpoints, const AcpfOptions& options = {});

/// Setpoints from a dispatch: generator buses are PV at 1.0 p.u., loads draw
/// Q = P tan(acos pf). `bus_p_extra` adds further active injections (HVDC
/// terminals); empty means none.
AcpfSetpoints setpoints_from_dispatch(const Network& net, const std::vector<double>& g, const std::vector<double>& d,
                                      const Eigen::VectorXd& bus_p_extra = {}, double power_factor = 0.95);

struct OfflineLosses {
    std::vector<double> ac;       // per AC line, p.u.
    std::vector<double> dc;       // per HVDC link, p.u.
    std::vector<double> node;     // per bus: half of every adjacent line/link loss
    int acpf_iterations = 0;
};

/// Replays a cleared dispatch through the AC power flow (slack absorbs the
/// losses) and evaluates HVDC losses from their quadratics at the cleared flows.
/// Components whose lines are all resistance-free have zero active losses and
/// are not solved.
OfflineLosses losses_from_dispatch(const Network& net, const MarketOutcome& outcome, const AcpfOptions& options = {});

/// Losses per zonal corridor, per HVDC link and per zone (lines inside the
/// zone only) for a reduction of `net`.
struct ZonalLosses {
    std::map<std::string, double> corridor;
    std::map<std::string, double> hvdc;
    std::vector<double> intra;
};
ZonalLosses aggregate_losses(const Network& net, const ZonalNetwork& zn, const OfflineLosses& losses);

}  // namespace lossy
