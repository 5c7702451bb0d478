#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lossy/network.hpp"

namespace lossy {

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PtdfKind { Nodal, Zonal };

/// Sensitivity of branch (or corridor) flows to injections at each column,
/// balanced by the slack column of the column's synchronous component.
struct PTDFMatrix {
    PtdfKind kind = PtdfKind::Nodal;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    Eigen::MatrixXd values;
    std::vector<std::size_t> component_of_col;
    std::vector<std::size_t> slack_cols;  // one per component
    std::vector<double> r_squared;        // zonal only: per row

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Exact PTDF from the inverse of the slack-reduced bus susceptance matrix.
/// `slack` overrides the declared slack of the component containing it.
PTDFMatrix nodal_ptdf(const Network& net, std::optional<std::string> slack = std::nullopt);

/// Flows for an injection vector that balances within every component.
Eigen::VectorXd flows_from_injections(const PTDFMatrix& ptdf, const Eigen::VectorXd& injections);

struct SamplingConfig {
    std::size_t n_patterns = 50;
    std::size_t placements_per_pattern = 4;
    double perturbation_mw = 1.0;
    double ridge = 0.0;
};

/// Corridor-by-zone PTDF fit by least squares on sampled +1 MW generator
/// perturbations; deterministic for a given seed.
PTDFMatrix zonal_ptdf_estimate(const Network& net, const ZoneMap& zone_map,
                               const SamplingConfig& sampler, std::uint64_t seed);

/// Corridor flows implied by nodal branch flows.
Eigen::VectorXd corridor_flows(const ZonalNetwork& zn, const Eigen::VectorXd& line_flows);

std::string ptdf_to_csv(const PTDFMatrix& ptdf);
/// Values only; component and slack metadata are recomputed from zero columns.
PTDFMatrix ptdf_from_csv(const std::string& text, PtdfKind kind);

}  // namespace lossy
