#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lossy/quadratic_loss.hpp"

namespace lossy {

/// Raised for malformed or inconsistent case data. The message names the
/// offending element.
class CaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultInelasticUtility = 1000.0;  // $/MWh

struct Bus {
    std::string id;
    std::string zone;
    bool is_slack = false;
};

// All power quantities below are per-unit on Network::base_power.
struct ACLine {
    std::string id;
    std::string from;
    std::string to;
    double susceptance = 0.0;
    double resistance = 0.0;
    double shunt_susceptance = 0.0;
    double capacity = 0.0;
};

struct HVDCLink {
    std::string id;
    std::string from;
    std::string to;
    double capacity = 0.0;
    QuadraticLoss loss_params;
};

struct Generator {
    std::string id;
    std::string bus;
    double cost = 0.0;  // $/MWh
    double g_min = 0.0;
    double g_max = 0.0;
    bool wind = false;
};

struct Load {
    std::string id;
    std::string bus;
    double utility = kDefaultInelasticUtility;  // $/MWh
    double d_min = 0.0;
    double d_max = 0.0;

    bool inelastic() const { return d_min == d_max; }
};

struct ZoneInfo {
    std::string id;
    double intra_loss = 0.0;  // p.u., offline estimate of intra-zonal losses
};

/// Immutable power-system data model. Construct through `Network::build`
/// (or `load_case`), which validates referential integrity and limits.
class Network {
public:
    static Network build(std::string name, double base_power, double base_voltage,
                         std::vector<Bus> buses, std::vector<ACLine> ac_lines,
                         std::vector<HVDCLink> hvdc_links, std::vector<Generator> generators,
                         std::vector<Load> loads, std::vector<ZoneInfo> zones = {});

    const std::string& name() const { return name_; }
    double base_power() const { return base_power_; }
    double base_voltage() const { return base_voltage_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<ACLine>& ac_lines() const { return ac_lines_; }
    const std::vector<HVDCLink>& hvdc_links() const { return hvdc_links_; }
    const std::vector<Generator>& generators() const { return generators_; }
    const std::vector<Load>& loads() const { return loads_; }
    const std::vector<ZoneInfo>& zones() const { return zones_; }

    std::size_t bus_index(std::string_view id) const;
    std::optional<std::size_t> find_bus(std::string_view id) const;
    std::size_t zone_index(std::string_view id) const;

    /// Synchronous AC component of each bus (components numbered in order of
    /// their lowest bus index).
    const std::vector<std::size_t>& component_of_bus() const { return component_; }
    std::size_t component_count() const { return component_count_; }
    /// Slack bus index of each component.
    const std::vector<std::size_t>& slack_buses() const { return slacks_; }

    /// Copy with generator/load limits replaced; used for snapshot scaling.
    Network with_injections(std::vector<Generator> generators, std::vector<Load> loads) const;

private:
    void index_and_validate();

    std::string name_;
    double base_power_ = 100.0;
    double base_voltage_ = 400.0;
    std::vector<Bus> buses_;
    std::vector<ACLine> ac_lines_;
    std::vector<HVDCLink> hvdc_links_;
    std::vector<Generator> generators_;
    std::vector<Load> loads_;
    std::vector<ZoneInfo> zones_;

    std::unordered_map<std::string, std::size_t> bus_lookup_;
    std::unordered_map<std::string, std::size_t> zone_lookup_;
    std::vector<std::size_t> component_;
    std::size_t component_count_ = 0;
    std::vector<std::size_t> slacks_;
};

/// Parse a JSON case document (MW / kV units) into a per-unit Network.
Network load_case(std::string_view json_text);
Network load_case_file(const std::string& path);
/// Inverse of load_case; emits MW units.
std::string serialize_case(const Network& net);

// --- zonal reduction ------------------------------------------------------

/// Cross-border AC lines between one pair of zones, aggregated.
struct Corridor {
    std::string id;
    std::size_t from_zone = 0;
    std::size_t to_zone = 0;
    double capacity = 0.0;
    std::vector<std::size_t> member_lines;
    std::vector<int> orientation;  // +1 when the member runs from_zone -> to_zone
    QuadraticLoss equivalent_loss;  // quadratic of the parallel combination
};

struct ZonalLink {
    std::string id;
    std::size_t from_zone = 0;
    std::size_t to_zone = 0;
    double capacity = 0.0;
    QuadraticLoss loss_params;
    std::size_t source_link = 0;
};

struct ZonalNetwork {
    std::vector<std::string> zones;
    std::vector<Corridor> corridors;
    std::vector<ZonalLink> hvdc_links;
    std::vector<Generator> generators;  // `bus` holds the zone id
    std::vector<Load> loads;            // `bus` holds the zone id
    std::vector<double> intra_loss;     // p.u. per zone
    std::vector<std::size_t> zone_of_bus;
    std::vector<std::string> warnings;
    double base_power = 100.0;

    std::size_t zone_index(std::string_view id) const;
};

using ZoneMap = std::map<std::string, std::string>;  // bus id -> zone id

/// Zone assignment carried by the buses themselves.
ZoneMap zone_map_of(const Network& net);

ZonalNetwork reduce_to_zonal(const Network& net, const ZoneMap& zone_map);

}  // namespace lossy
