#include "lossy/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lossy {

namespace {

using nlohmann::json;

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw CaseError(where + ": missing field '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw CaseError(where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return field<T>(obj, key, where);
}

const json& array_at(const json& doc, const char* key) {
    static const json empty = json::array();
    auto it = doc.find(key);
    if (it == doc.end()) return empty;
    if (!it->is_array()) throw CaseError(std::string("case: '") + key + "' must be an array");
    return *it;
}

double mw(double pu, double base) { return pu * base; }

}  // namespace

Network Network::build(std::string name, double base_power, double base_voltage,
                       std::vector<Bus> buses, std::vector<ACLine> ac_lines,
                       std::vector<HVDCLink> hvdc_links, std::vector<Generator> generators,
                       std::vector<Load> loads, std::vector<ZoneInfo> zones) {
    Network net;
    net.name_ = std::move(name);
    net.base_power_ = base_power;
    net.base_voltage_ = base_voltage;
    net.buses_ = std::move(buses);
    net.ac_lines_ = std::move(ac_lines);
    net.hvdc_links_ = std::move(hvdc_links);
    net.generators_ = std::move(generators);
    net.loads_ = std::move(loads);
    net.zones_ = std::move(zones);
    net.index_and_validate();
    return net;
}

void Network::index_and_validate() {
    if (!(base_power_ > 0.0)) throw CaseError("case: base_power_mva must be positive");
    if (buses_.empty()) throw CaseError("case: no buses");

    bus_lookup_.clear();
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (!bus_lookup_.emplace(buses_[i].id, i).second)
            throw CaseError("bus '" + buses_[i].id + "': duplicate id");
    }

    // Zones listed explicitly keep their order; others are appended in bus order.
    zone_lookup_.clear();
    for (std::size_t z = 0; z < zones_.size(); ++z) {
        if (!zone_lookup_.emplace(zones_[z].id, z).second)
            throw CaseError("zone '" + zones_[z].id + "': duplicate id");
    }
    for (auto& bus : buses_) {
        if (bus.zone.empty()) bus.zone = "1";
        if (!zone_lookup_.count(bus.zone)) {
            zone_lookup_.emplace(bus.zone, zones_.size());
            zones_.push_back({bus.zone, 0.0});
        }
    }

    auto require_bus = [&](const std::string& bus, const std::string& what) {
        if (!bus_lookup_.count(bus))
            throw CaseError(what + ": dangling reference to bus '" + bus + "'");
    };
    for (const auto& line : ac_lines_) {
        const std::string what = "ac_line '" + line.id + "'";
        require_bus(line.from, what);
        require_bus(line.to, what);
        if (line.from == line.to) throw CaseError(what + ": from and to are the same bus");
        if (!(line.susceptance > 0.0)) throw CaseError(what + ": susceptance must be positive");
        if (!(line.resistance >= 0.0)) throw CaseError(what + ": resistance must be nonnegative");
        if (!(line.capacity > 0.0)) throw CaseError(what + ": nonpositive capacity");
    }
    for (const auto& link : hvdc_links_) {
        const std::string what = "hvdc_link '" + link.id + "'";
        require_bus(link.from, what);
        require_bus(link.to, what);
        if (link.from == link.to) throw CaseError(what + ": from and to are the same bus");
        if (!(link.capacity > 0.0)) throw CaseError(what + ": nonpositive capacity");
        if (link.loss_params.a < 0.0 || link.loss_params.c < 0.0)
            throw CaseError(what + ": loss parameters A and C must be nonnegative");
    }
    for (const auto& gen : generators_) {
        const std::string what = "generator '" + gen.id + "'";
        require_bus(gen.bus, what);
        if (!(gen.g_min >= 0.0 && gen.g_min <= gen.g_max))
            throw CaseError(what + ": requires 0 <= g_min <= g_max");
    }
    for (const auto& load : loads_) {
        const std::string what = "load '" + load.id + "'";
        require_bus(load.bus, what);
        if (!(load.d_min >= 0.0 && load.d_min <= load.d_max))
            throw CaseError(what + ": requires 0 <= d_min <= d_max");
    }

    DisjointSet sets(buses_.size());
    for (const auto& line : ac_lines_) sets.unite(bus_index(line.from), bus_index(line.to));
    component_.assign(buses_.size(), 0);
    std::vector<std::size_t> root_to_component(buses_.size(), SIZE_MAX);
    component_count_ = 0;
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        const std::size_t root = sets.find(i);
        if (root_to_component[root] == SIZE_MAX) root_to_component[root] = component_count_++;
        component_[i] = root_to_component[root];
    }
    slacks_.assign(component_count_, SIZE_MAX);
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (!buses_[i].is_slack) continue;
        auto& slot = slacks_[component_[i]];
        if (slot != SIZE_MAX)
            throw CaseError("bus '" + buses_[i].id + "': second slack in the AC component of bus '" +
                            buses_[slot].id + "'");
        slot = i;
    }
    // A component without a declared slack uses its first bus.
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        auto& slot = slacks_[component_[i]];
        if (slot == SIZE_MAX) {
            slot = i;
            buses_[i].is_slack = true;
        }
    }
}

std::size_t Network::bus_index(std::string_view id) const {
    auto it = bus_lookup_.find(std::string(id));
    if (it == bus_lookup_.end()) throw CaseError("unknown bus '" + std::string(id) + "'");
    return it->second;
}

std::optional<std::size_t> Network::find_bus(std::string_view id) const {
    auto it = bus_lookup_.find(std::string(id));
    if (it == bus_lookup_.end()) return std::nullopt;
    return it->second;
}

std::size_t Network::zone_index(std::string_view id) const {
    auto it = zone_lookup_.find(std::string(id));
    if (it == zone_lookup_.end()) throw CaseError("unknown zone '" + std::string(id) + "'");
    return it->second;
}

Network Network::with_injections(std::vector<Generator> generators, std::vector<Load> loads) const {
    return build(name_, base_power_, base_voltage_, buses_, ac_lines_, hvdc_links_,
                 std::move(generators), std::move(loads), zones_);
}

Network load_case(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw CaseError(std::string("case: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CaseError("case: top level must be an object");

    const double base = field<double>(doc, "base_power_mva", "case");
    if (!(base > 0.0)) throw CaseError("case: base_power_mva must be positive");
    const double kv = field_or<double>(doc, "base_voltage_kv", 400.0, "case");
    const std::string name = field_or<std::string>(doc, "name", "", "case");

    std::vector<Bus> buses;
    for (const auto& b : array_at(doc, "buses")) {
        const std::string id = field<std::string>(b, "id", "bus");
        const std::string where = "bus '" + id + "'";
        buses.push_back({id, field_or<std::string>(b, "zone", "1", where),
                         field_or<bool>(b, "is_slack", false, where)});
    }

    std::vector<ACLine> lines;
    for (const auto& l : array_at(doc, "ac_lines")) {
        ACLine line;
        line.id = field<std::string>(l, "id", "ac_line");
        const std::string where = "ac_line '" + line.id + "'";
        line.from = field<std::string>(l, "from", where);
        line.to = field<std::string>(l, "to", where);
        line.susceptance = field<double>(l, "susceptance", where);
        line.resistance = field_or<double>(l, "resistance", 0.0, where);
        line.shunt_susceptance = field_or<double>(l, "shunt_susceptance", 0.0, where);
        line.capacity = field<double>(l, "capacity", where) / base;
        lines.push_back(std::move(line));
    }

    std::vector<HVDCLink> links;
    for (const auto& l : array_at(doc, "hvdc_links")) {
        HVDCLink link;
        link.id = field<std::string>(l, "id", "hvdc_link");
        const std::string where = "hvdc_link '" + link.id + "'";
        link.from = field<std::string>(l, "from", where);
        link.to = field<std::string>(l, "to", where);
        link.capacity = field<double>(l, "capacity", where) / base;
        if (l.contains("loss_params")) {
            const auto& p = l.at("loss_params");
            link.loss_params = {field_or<double>(p, "A", 0.0, where),
                                field_or<double>(p, "B", 0.0, where),
                                field_or<double>(p, "C", 0.0, where)};
        }
        links.push_back(std::move(link));
    }

    std::vector<Generator> gens;
    for (const auto& g : array_at(doc, "generators")) {
        Generator gen;
        gen.id = field<std::string>(g, "id", "generator");
        const std::string where = "generator '" + gen.id + "'";
        gen.bus = field<std::string>(g, "bus", where);
        gen.cost = field<double>(g, "cost", where);
        gen.g_max = field<double>(g, "g_max", where) / base;
        gen.g_min = field_or<double>(g, "g_min", 0.0, where) / base;
        gen.wind = field_or<bool>(g, "wind", false, where);
        gens.push_back(std::move(gen));
    }

    std::vector<Load> loads;
    for (const auto& d : array_at(doc, "loads")) {
        Load load;
        load.id = field<std::string>(d, "id", "load");
        const std::string where = "load '" + load.id + "'";
        load.bus = field<std::string>(d, "bus", where);
        load.utility = field_or<double>(d, "utility", kDefaultInelasticUtility, where);
        load.d_max = field<double>(d, "d_max", where) / base;
        load.d_min = d.contains("d_min") ? field<double>(d, "d_min", where) / base : load.d_max;
        loads.push_back(std::move(load));
    }

    std::vector<ZoneInfo> zones;
    if (doc.contains("zones")) {
        const auto& z = doc.at("zones");
        if (!z.is_object()) throw CaseError("case: 'zones' must be an object");
        for (const auto& [id, info] : z.items()) {
            const std::string where = "zone '" + id + "'";
            zones.push_back({id, field_or<double>(info, "intra_loss", 0.0, where) / base});
        }
    }

    return Network::build(name, base, kv, std::move(buses), std::move(lines), std::move(links),
                          std::move(gens), std::move(loads), std::move(zones));
}

Network load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("case file not found: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_case(buffer.str());
}

std::string serialize_case(const Network& net) {
    const double base = net.base_power();
    json doc;
    doc["name"] = net.name();
    doc["base_power_mva"] = base;
    doc["base_voltage_kv"] = net.base_voltage();
    doc["buses"] = json::array();
    for (const auto& b : net.buses())
        doc["buses"].push_back({{"id", b.id}, {"zone", b.zone}, {"is_slack", b.is_slack}});
    doc["ac_lines"] = json::array();
    for (const auto& l : net.ac_lines())
        doc["ac_lines"].push_back({{"id", l.id},
                                   {"from", l.from},
                                   {"to", l.to},
                                   {"susceptance", l.susceptance},
                                   {"resistance", l.resistance},
                                   {"shunt_susceptance", l.shunt_susceptance},
                                   {"capacity", mw(l.capacity, base)}});
    doc["hvdc_links"] = json::array();
    for (const auto& l : net.hvdc_links())
        doc["hvdc_links"].push_back(
            {{"id", l.id},
             {"from", l.from},
             {"to", l.to},
             {"capacity", mw(l.capacity, base)},
             {"loss_params", {{"A", l.loss_params.a}, {"B", l.loss_params.b}, {"C", l.loss_params.c}}}});
    doc["generators"] = json::array();
    for (const auto& g : net.generators())
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", g.bus},
                                     {"cost", g.cost},
                                     {"g_min", mw(g.g_min, base)},
                                     {"g_max", mw(g.g_max, base)},
                                     {"wind", g.wind}});
    doc["loads"] = json::array();
    for (const auto& d : net.loads())
        doc["loads"].push_back({{"id", d.id},
                                {"bus", d.bus},
                                {"utility", d.utility},
                                {"d_min", mw(d.d_min, base)},
                                {"d_max", mw(d.d_max, base)}});
    doc["zones"] = json::object();
    for (const auto& z : net.zones()) doc["zones"][z.id] = {{"intra_loss", mw(z.intra_loss, base)}};
    return doc.dump(2);
}

// --- zonal reduction ------------------------------------------------------

std::size_t ZonalNetwork::zone_index(std::string_view id) const {
    auto it = std::find(zones.begin(), zones.end(), id);
    if (it == zones.end()) throw CaseError("unknown zone '" + std::string(id) + "'");
    return static_cast<std::size_t>(it - zones.begin());
}

ZoneMap zone_map_of(const Network& net) {
    ZoneMap map;
    for (const auto& b : net.buses()) map[b.id] = b.zone;
    return map;
}

ZonalNetwork reduce_to_zonal(const Network& net, const ZoneMap& zone_map) {
    ZonalNetwork zn;
    zn.base_power = net.base_power();

    // Zone order: the network's declared zones first, then new ids in bus order.
    std::vector<std::string> seen;
    for (const auto& b : net.buses()) {
        auto it = zone_map.find(b.id);
        if (it == zone_map.end()) throw CaseError("zone map: bus '" + b.id + "' has no zone");
        if (std::find(seen.begin(), seen.end(), it->second) == seen.end()) seen.push_back(it->second);
    }
    for (const auto& z : net.zones())
        if (std::find(seen.begin(), seen.end(), z.id) != seen.end()) zn.zones.push_back(z.id);
    for (const auto& z : seen)
        if (std::find(zn.zones.begin(), zn.zones.end(), z) == zn.zones.end()) zn.zones.push_back(z);

    zn.zone_of_bus.resize(net.buses().size());
    for (std::size_t i = 0; i < net.buses().size(); ++i)
        zn.zone_of_bus[i] = zn.zone_index(zone_map.at(net.buses()[i].id));

    zn.intra_loss.assign(zn.zones.size(), 0.0);
    for (const auto& z : net.zones()) {
        auto it = std::find(zn.zones.begin(), zn.zones.end(), z.id);
        if (it != zn.zones.end()) zn.intra_loss[it - zn.zones.begin()] = z.intra_loss;
    }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> corridor_of_pair;
    for (std::size_t l = 0; l < net.ac_lines().size(); ++l) {
        const auto& line = net.ac_lines()[l];
        const std::size_t zf = zn.zone_of_bus[net.bus_index(line.from)];
        const std::size_t zt = zn.zone_of_bus[net.bus_index(line.to)];
        if (zf == zt) continue;
        const auto key = std::minmax(zf, zt);
        auto [it, inserted] = corridor_of_pair.emplace(key, zn.corridors.size());
        if (inserted) {
            Corridor c;
            c.from_zone = key.first;
            c.to_zone = key.second;
            c.id = zn.zones[key.first] + "-" + zn.zones[key.second];
            zn.corridors.push_back(std::move(c));
        }
        Corridor& c = zn.corridors[it->second];
        c.member_lines.push_back(l);
        c.orientation.push_back(zf == c.from_zone ? 1 : -1);
        c.capacity += line.capacity;
    }
    // Parallel members share flow in proportion to susceptance.
    for (auto& c : zn.corridors) {
        double total_b = 0.0;
        for (std::size_t l : c.member_lines) total_b += net.ac_lines()[l].susceptance;
        double a = 0.0;
        for (std::size_t l : c.member_lines) {
            const auto& line = net.ac_lines()[l];
            const double share = line.susceptance / total_b;
            a += line.resistance * share * share;
        }
        c.equivalent_loss = QuadraticLoss::resistive(a);
    }

    for (std::size_t k = 0; k < net.hvdc_links().size(); ++k) {
        const auto& link = net.hvdc_links()[k];
        ZonalLink zl;
        zl.id = link.id;
        zl.from_zone = zn.zone_of_bus[net.bus_index(link.from)];
        zl.to_zone = zn.zone_of_bus[net.bus_index(link.to)];
        zl.capacity = link.capacity;
        zl.loss_params = link.loss_params;
        zl.source_link = k;
        if (zl.from_zone == zl.to_zone)
            zn.warnings.push_back("hvdc link '" + link.id + "' is internal to zone '" +
                                  zn.zones[zl.from_zone] + "'");
        zn.hvdc_links.push_back(std::move(zl));
    }

    std::vector<bool> active(zn.zones.size(), false);
    for (const auto& g : net.generators()) {
        Generator zg = g;
        zg.bus = zn.zones[zn.zone_of_bus[net.bus_index(g.bus)]];
        active[zn.zone_index(zg.bus)] = true;
        zn.generators.push_back(std::move(zg));
    }
    for (const auto& d : net.loads()) {
        Load zd = d;
        zd.bus = zn.zones[zn.zone_of_bus[net.bus_index(d.bus)]];
        active[zn.zone_index(zd.bus)] = true;
        zn.loads.push_back(std::move(zd));
    }
    for (std::size_t z = 0; z < zn.zones.size(); ++z)
        if (!active[z]) zn.warnings.push_back("zone '" + zn.zones[z] + "' has no generation and no load");

    return zn;
}

}  // namespace lossy
