#include "lossy/ptdf.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace lossy {

namespace {

// Components of a graph given as edge list over `n` vertices; numbered by lowest vertex.
std::vector<std::size_t> label_components(std::size_t n,
                                          const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                          std::size_t& count) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [a, b] : edges) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::size_t> label(n), root_label(n, SIZE_MAX);
    count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (root_label[r] == SIZE_MAX) root_label[r] = count++;
        label[i] = root_label[r];
    }
    return label;
}

}  // namespace

PTDFMatrix nodal_ptdf(const Network& net, std::optional<std::string> slack) {
    const std::size_t nb = net.buses().size();
    const std::size_t nl = net.ac_lines().size();

    PTDFMatrix out;
    out.kind = PtdfKind::Nodal;
    out.component_of_col = net.component_of_bus();
    out.slack_cols = net.slack_buses();
    if (slack) {
        const std::size_t s = net.bus_index(*slack);
        out.slack_cols[out.component_of_col[s]] = s;
    }
    for (const auto& b : net.buses()) out.col_ids.push_back(b.id);
    for (const auto& l : net.ac_lines()) out.row_ids.push_back(l.id);
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nl), static_cast<Eigen::Index>(nb));

    std::vector<std::size_t> from(nl), to(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        from[l] = net.bus_index(net.ac_lines()[l].from);
        to[l] = net.bus_index(net.ac_lines()[l].to);
    }

    for (std::size_t c = 0; c < out.slack_cols.size(); ++c) {
        // Reduced index for every non-slack bus of this component.
        std::vector<std::size_t> local(nb, SIZE_MAX);
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < nb; ++i) {
            if (out.component_of_col[i] != c || i == out.slack_cols[c]) continue;
            local[i] = members.size();
            members.push_back(i);
        }
        if (members.empty()) continue;

        const auto m = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t l = 0; l < nl; ++l) {
            if (out.component_of_col[from[l]] != c) continue;
            const double b = net.ac_lines()[l].susceptance;
            const std::size_t i = local[from[l]], j = local[to[l]];
            if (i != SIZE_MAX) bbus(i, i) += b;
            if (j != SIZE_MAX) bbus(j, j) += b;
            if (i != SIZE_MAX && j != SIZE_MAX) {
                bbus(i, j) -= b;
                bbus(j, i) -= b;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(bbus);
        if (!lu.isInvertible())
            throw TopologyError("nodal_ptdf: singular reduced susceptance matrix in the component of bus '" +
                                net.buses()[out.slack_cols[c]].id + "'");
        const Eigen::MatrixXd x = lu.inverse();

        for (std::size_t l = 0; l < nl; ++l) {
            if (out.component_of_col[from[l]] != c) continue;
            const double b = net.ac_lines()[l].susceptance;
            const std::size_t i = local[from[l]], j = local[to[l]];
            for (std::size_t k = 0; k < members.size(); ++k) {
                const double xi = i == SIZE_MAX ? 0.0 : x(i, k);
                const double xj = j == SIZE_MAX ? 0.0 : x(j, k);
                out.values(l, members[k]) = b * (xi - xj);
            }
        }
    }
    return out;
}

Eigen::VectorXd flows_from_injections(const PTDFMatrix& ptdf, const Eigen::VectorXd& injections) {
    if (static_cast<std::size_t>(injections.size()) != ptdf.cols())
        throw std::invalid_argument("flows_from_injections: injection vector has " +
                                    std::to_string(injections.size()) + " entries, PTDF has " +
                                    std::to_string(ptdf.cols()) + " columns");
    std::vector<double> imbalance(ptdf.slack_cols.size(), 0.0);
    for (std::size_t n = 0; n < ptdf.cols(); ++n) imbalance[ptdf.component_of_col[n]] += injections[n];
    for (std::size_t c = 0; c < imbalance.size(); ++c)
        if (std::abs(imbalance[c]) > 1e-9)
            throw std::invalid_argument("flows_from_injections: injections unbalanced by " +
                                        std::to_string(imbalance[c]) + " p.u. in component of '" +
                                        ptdf.col_ids[ptdf.slack_cols[c]] + "'");
    return ptdf.values * injections;
}

Eigen::VectorXd corridor_flows(const ZonalNetwork& zn, const Eigen::VectorXd& line_flows) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(zn.corridors.size()));
    for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
        const auto& cor = zn.corridors[c];
        for (std::size_t k = 0; k < cor.member_lines.size(); ++k)
            out[c] += cor.orientation[k] * line_flows[cor.member_lines[k]];
    }
    return out;
}

PTDFMatrix zonal_ptdf_estimate(const Network& net, const ZoneMap& zone_map,
                               const SamplingConfig& sampler, std::uint64_t seed) {
    const ZonalNetwork zn = reduce_to_zonal(net, zone_map);
    const std::size_t nz = zn.zones.size();
    if (nz < 2) throw EstimationError("zonal_ptdf_estimate: needs at least 2 zones");
    if (sampler.n_patterns < nz)
        throw EstimationError("zonal_ptdf_estimate: rank-deficient regression with " +
                              std::to_string(sampler.n_patterns) + " patterns for " + std::to_string(nz) +
                              " zones; increase n_patterns");
    if (net.generators().empty()) throw EstimationError("zonal_ptdf_estimate: no generators to perturb");

    const PTDFMatrix nodal = nodal_ptdf(net);
    const std::size_t nb = net.buses().size();

    PTDFMatrix out;
    out.kind = PtdfKind::Zonal;
    out.col_ids = zn.zones;
    for (const auto& c : zn.corridors) out.row_ids.push_back(c.id);

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& c : zn.corridors) edges.emplace_back(c.from_zone, c.to_zone);
    std::size_t ncomp = 0;
    out.component_of_col = label_components(nz, edges, ncomp);
    // Slack zone of a component: zone of the first nodal slack bus that falls in it.
    out.slack_cols.assign(ncomp, SIZE_MAX);
    for (std::size_t s : net.slack_buses()) {
        const std::size_t z = zn.zone_of_bus[s];
        auto& slot = out.slack_cols[out.component_of_col[z]];
        if (slot == SIZE_MAX) slot = z;
    }
    for (std::size_t z = 0; z < nz; ++z)
        if (out.slack_cols[out.component_of_col[z]] == SIZE_MAX) out.slack_cols[out.component_of_col[z]] = z;

    // Regressor columns: non-slack zones of components that own at least one corridor.
    std::vector<bool> has_corridor(ncomp, false);
    for (const auto& c : zn.corridors) has_corridor[out.component_of_col[c.from_zone]] = true;
    std::vector<std::size_t> regressor_of_zone(nz, SIZE_MAX), zone_of_regressor;
    for (std::size_t z = 0; z < nz; ++z) {
        const std::size_t comp = out.component_of_col[z];
        if (!has_corridor[comp] || out.slack_cols[comp] == z) continue;
        regressor_of_zone[z] = zone_of_regressor.size();
        zone_of_regressor.push_back(z);
    }

    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(zn.corridors.size()),
                                       static_cast<Eigen::Index>(nz));
    out.r_squared.assign(zn.corridors.size(), 1.0);
    if (zone_of_regressor.empty()) return out;

    // Candidate sink buses per nodal component (non-slack), in bus order.
    std::vector<std::vector<std::size_t>> sinks(net.component_count());
    for (std::size_t i = 0; i < nb; ++i)
        if (net.slack_buses()[net.component_of_bus()[i]] != i) sinks[net.component_of_bus()[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double delta = sampler.perturbation_mw / net.base_power();

    std::vector<Eigen::VectorXd> xs;
    std::vector<Eigen::VectorXd> ys;
    Eigen::VectorXd injection(static_cast<Eigen::Index>(nb));
    std::size_t rotation = 0;
    for (std::size_t p = 0; p < sampler.n_patterns; ++p) {
        // Base operating point: uniform generation, loads within +-30 %, rebalanced at the slack.
        injection.setZero();
        for (const auto& g : net.generators()) injection[net.bus_index(g.bus)] += g.g_max * unit(rng);
        for (const auto& d : net.loads()) injection[net.bus_index(d.bus)] -= d.d_max * (0.7 + 0.6 * unit(rng));
        std::vector<double> imbalance(net.component_count(), 0.0);
        for (std::size_t i = 0; i < nb; ++i) imbalance[net.component_of_bus()[i]] += injection[i];
        for (std::size_t c = 0; c < imbalance.size(); ++c) injection[net.slack_buses()[c]] -= imbalance[c];
        const Eigen::VectorXd base_flows = corridor_flows(zn, nodal.values * injection);

        for (const auto& g : net.generators()) {
            const std::size_t gb = net.bus_index(g.bus);
            const auto& candidates = sinks[net.component_of_bus()[gb]];
            if (candidates.empty()) continue;
            for (std::size_t k = 0; k < sampler.placements_per_pattern; ++k) {
                const std::size_t sink = candidates[rotation++ % candidates.size()];
                if (sink == gb) continue;
                Eigen::VectorXd perturbed = injection;
                perturbed[gb] += delta;
                perturbed[sink] -= delta;
                const Eigen::VectorXd dflow = (corridor_flows(zn, nodal.values * perturbed) - base_flows) / delta;

                Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(zone_of_regressor.size()));
                const std::size_t zg = zn.zone_of_bus[gb], zs = zn.zone_of_bus[sink];
                if (regressor_of_zone[zg] != SIZE_MAX) x[regressor_of_zone[zg]] += 1.0;
                if (regressor_of_zone[zs] != SIZE_MAX) x[regressor_of_zone[zs]] -= 1.0;
                xs.push_back(std::move(x));
                ys.push_back(dflow);
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto k = static_cast<Eigen::Index>(zone_of_regressor.size());
    Eigen::MatrixXd design(n, k);
    Eigen::MatrixXd response(n, static_cast<Eigen::Index>(zn.corridors.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        design.row(i) = xs[i].transpose();
        response.row(i) = ys[i].transpose();
    }

    Eigen::MatrixXd normal = design.transpose() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
        throw EstimationError("zonal_ptdf_estimate: rank-deficient regression (rank " + std::to_string(qr.rank()) +
                              " of " + std::to_string(k) + "); increase n_patterns");
    Eigen::MatrixXd coef;
    if (sampler.ridge > 0.0) {
        normal.diagonal().array() += sampler.ridge;
        coef = normal.ldlt().solve(design.transpose() * response);
    } else {
        coef = qr.solve(response);
    }

    for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
        for (Eigen::Index r = 0; r < k; ++r) out.values(c, zone_of_regressor[r]) = coef(r, c);
        const Eigen::VectorXd fitted = design * coef.col(c);
        const Eigen::VectorXd y = response.col(c);
        const double ss_res = (y - fitted).squaredNorm();
        const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
        out.r_squared[c] = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    }
    return out;
}

std::string ptdf_to_csv(const PTDFMatrix& ptdf) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "line_id";
    for (const auto& c : ptdf.col_ids) os << ',' << c;
    os << '\n';
    for (std::size_t r = 0; r < ptdf.rows(); ++r) {
        os << ptdf.row_ids[r];
        for (std::size_t c = 0; c < ptdf.cols(); ++c) os << ',' << ptdf.values(r, c);
        os << '\n';
    }
    return os.str();
}

PTDFMatrix ptdf_from_csv(const std::string& text, PtdfKind kind) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("ptdf csv: empty input");
    auto header = split(line);
    if (header.empty()) throw std::invalid_argument("ptdf csv: missing header");

    PTDFMatrix out;
    out.kind = kind;
    out.col_ids.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("ptdf csv: row '" + cells.front() + "' has the wrong number of cells");
        out.row_ids.push_back(cells[0]);
        std::vector<double> v;
        for (std::size_t i = 1; i < cells.size(); ++i) v.push_back(std::stod(cells[i]));
        rows.push_back(std::move(v));
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.col_ids.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < out.col_ids.size(); ++c) out.values(r, c) = rows[r][c];

    // Single component; slack is the first all-zero column.
    out.component_of_col.assign(out.col_ids.size(), 0);
    out.slack_cols = {0};
    for (std::size_t c = 0; c < out.col_ids.size(); ++c) {
        if (out.values.rows() == 0 || out.values.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff() == 0.0) {
            out.slack_cols = {c};
            break;
        }
    }
    return out;
}

}  // namespace lossy
