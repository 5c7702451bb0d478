#include "lossy/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "parallel.hpp"

namespace lossy {

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Depends only on the run seed, the ordered zone pair and the index, so any
// population containing this exchange reproduces the same operating point.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& exporter, const std::string& importer,
                          std::size_t index) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ fnv1a(exporter));
    h = splitmix(h ^ fnv1a(importer, 0x84222325cbf29ce4ULL));
    return splitmix(h ^ static_cast<std::uint64_t>(index));
}

struct Context {
    const Network& net;
    ZonalNetwork zn;
    std::vector<std::size_t> zone_component;  // npos when a zone spans several
};

constexpr auto npos = std::numeric_limits<std::size_t>::max();

Context make_context(const Network& net, const ZoneMap& zone_map) {
    Context ctx{net, reduce_to_zonal(net, zone_map), {}};
    ctx.zone_component.assign(ctx.zn.zones.size(), npos - 1);
    for (std::size_t i = 0; i < net.buses().size(); ++i) {
        auto& zc = ctx.zone_component[ctx.zn.zone_of_bus[i]];
        const auto c = net.component_of_bus()[i];
        if (zc == npos - 1) zc = c;
        else if (zc != c) zc = npos;
    }
    return ctx;
}

// One direction of one zone pair: the network with its slack moved into the
// exporting zone plus everything needed to draw and measure samples.
class PairSampler {
public:
    // With `link`, the exchange runs over that HVDC link instead of the AC grid.
    PairSampler(const Context& ctx, std::size_t exporter, std::size_t importer, const PopulationOptions& opt,
                std::optional<std::size_t> link = std::nullopt)
        : ctx_(ctx), exporter_(exporter), importer_(importer), opt_(opt), link_(link) {
        const Network& net = ctx.net;
        const auto& zn = ctx.zn;
        const std::size_t comp = ctx.zone_component[exporter];
        const std::size_t icomp = ctx.zone_component[importer];
        if (link) {
            const auto& hl = net.hvdc_links()[*link];
            const auto zf = zn.zone_of_bus[net.bus_index(hl.from)], zt = zn.zone_of_bus[net.bus_index(hl.to)];
            if (zf == zt) throw CalibrationError("HVDC link " + hl.id + " does not cross a zone border");
            send_ = net.bus_index(zf == exporter ? hl.from : hl.to);
            recv_ = net.bus_index(zf == exporter ? hl.to : hl.from);
            if (comp >= npos - 1 || icomp >= npos - 1)
                throw CalibrationError("zones of HVDC link " + hl.id + " span several synchronous areas");
        } else if (comp >= npos - 1 || comp != icomp) {
            throw CalibrationError("zones " + zn.zones[exporter] + " and " + zn.zones[importer] +
                                   " do not share one synchronous AC area");
        }

        double best = -1.0;
        std::size_t slack_bus = 0;
        for (std::size_t j = 0; j < net.generators().size(); ++j) {
            const auto& g = net.generators()[j];
            const auto b = net.bus_index(g.bus);
            if (zn.zone_of_bus[b] != exporter || g.g_max <= 0.0) continue;
            gens_.push_back(j);
            g_total_ += g.g_max;
            if (g.g_max > best) best = g.g_max, slack_bus = b;
        }
        if (gens_.empty()) throw CalibrationError("zone " + zn.zones[exporter] + " has no generation to export");
        for (std::size_t j = 0; j < net.loads().size(); ++j) {
            const auto& d = net.loads()[j];
            if (zn.zone_of_bus[net.bus_index(d.bus)] != importer || d.d_max <= 0.0) continue;
            loads_.push_back(j);
            d_total_ += d.d_max;
        }
        if (loads_.empty()) throw CalibrationError("zone " + zn.zones[importer] + " has no load to import");

        // Exports are limited to what the exporting zone's border can carry.
        double cut = 0.0;
        for (const auto& l : net.ac_lines()) {
            const bool in_f = zn.zone_of_bus[net.bus_index(l.from)] == exporter;
            const bool in_t = zn.zone_of_bus[net.bus_index(l.to)] == exporter;
            if (in_f != in_t) cut += l.capacity;
        }
        level_ = link ? net.hvdc_links()[*link].capacity : (opt.limit_to_border ? std::min(g_total_, cut) : g_total_);

        auto buses = net.buses();
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (net.component_of_bus()[i] == comp) buses[i].is_slack = (i == slack_bus);
        moved_ = Network::build(net.name(), net.base_power(), net.base_voltage(), std::move(buses), net.ac_lines(),
                                net.hvdc_links(), net.generators(), net.loads(), net.zones());
        frozen_.resize(net.buses().size());
        for (std::size_t i = 0; i < frozen_.size(); ++i)
            frozen_[i] = net.component_of_bus()[i] != comp && net.component_of_bus()[i] != icomp;

        // Reactive circulation loses power with nothing exchanged; samples
        // record the increment over this base.
        auto base_sp = setpoints_from_dispatch(moved_, std::vector<double>(net.generators().size(), 0.0),
                                               std::vector<double>(net.loads().size(), 0.0));
        base_sp.frozen = frozen_;
        try {
            base_ = solve_acpf(moved_, base_sp, opt.acpf).line_loss;
        } catch (const DivergenceError& e) {
            throw CalibrationError(std::string("calibration: zero-exchange power flow diverged: ") + e.what());
        }

        for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
            const auto& cor = zn.corridors[c];
            if (!link && ((cor.from_zone == exporter && cor.to_zone == importer) ||
                          (cor.from_zone == importer && cor.to_zone == exporter)))
                corridor_ = c;
        }
    }

    // nullopt when the power flow diverges.
    std::optional<LossSample> draw(std::uint64_t seed) const {
        const Network& net = ctx_.net;
        const auto& zn = ctx_.zn;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(opt_.gen_lo, opt_.gen_hi);
        std::vector<double> g(net.generators().size(), 0.0), d(net.loads().size(), 0.0);
        // Export level uniform over [lo, hi] of the zone's capacity; the units
        // share it in proportion to their own uniform draws.
        const double x = level_ * u(rng);
        double w_total = 0.0;
        for (auto j : gens_) w_total += g[j] = u(rng) * net.generators()[j].g_max;
        for (auto j : gens_) g[j] *= x / w_total;
        Eigen::VectorXd extra = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.buses().size()));
        double delivered = x, link_loss = 0.0;
        if (link_) {
            link_loss = net.hvdc_links()[*link_].loss_params(x);
            delivered = x - link_loss;
            extra[static_cast<Eigen::Index>(send_)] -= x;
            extra[static_cast<Eigen::Index>(recv_)] += delivered;
        }
        for (auto j : loads_) d[j] = delivered * net.loads()[j].d_max / d_total_;

        auto sp = setpoints_from_dispatch(moved_, g, d, extra);
        sp.frozen = frozen_;
        ACPFSolution sol;
        try {
            sol = solve_acpf(moved_, sp, opt_.acpf);
        } catch (const DivergenceError&) {
            return std::nullopt;
        }

        LossSample s;
        s.exporter = zn.zones[exporter_];
        s.importer = zn.zones[importer_];
        s.exchange = x;
        s.seed = seed;
        s.zone_loss.assign(zn.zones.size(), 0.0);
        std::vector<double> inc(net.ac_lines().size());
        for (std::size_t l = 0; l < inc.size(); ++l) {
            const auto& line = net.ac_lines()[l];
            inc[l] = sol.line_loss[l] - base_[l];
            s.loss += inc[l];
            const auto zf = zn.zone_of_bus[net.bus_index(line.from)];
            if (zf == zn.zone_of_bus[net.bus_index(line.to)]) s.zone_loss[zf] += inc[l];
        }
        double injected = 0.0;
        for (Eigen::Index i = 0; i < sol.p_injection.size(); ++i) injected += sol.p_injection[i];
        s.balance_error = std::abs(injected - sol.total_loss());
        s.corridor_flows.resize(zn.corridors.size());
        for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
            const auto& cor = zn.corridors[c];
            double f = 0.0;  // measured where it leaves from_zone
            for (std::size_t m = 0; m < cor.member_lines.size(); ++m) {
                const auto l = cor.member_lines[m];
                f += cor.orientation[m] > 0 ? sol.p_from[l] : sol.p_to[l];
            }
            s.corridor_flows[c] = f;
        }
        if (link_) {
            s.corridor = net.hvdc_links()[*link_].id;
            s.flow = x;
            s.loss += link_loss;
            s.line_loss = link_loss;
        } else if (corridor_ != npos) {
            const auto& cor = zn.corridors[corridor_];
            s.corridor = cor.id;
            s.flow = cor.from_zone == exporter_ ? s.corridor_flows[corridor_] : -s.corridor_flows[corridor_];
            for (auto l : cor.member_lines) s.line_loss += inc[l];
        } else {
            s.flow = x;
        }
        return s;
    }

private:
    const Context& ctx_;
    std::size_t exporter_, importer_;
    const PopulationOptions& opt_;
    std::vector<std::size_t> gens_, loads_;
    double g_total_ = 0.0, d_total_ = 0.0;
    double level_ = 0.0;  // largest export, p.u.
    std::optional<std::size_t> link_;
    std::size_t send_ = 0, recv_ = 0;
    Network moved_;
    std::vector<bool> frozen_;
    std::vector<double> base_;  // per line, zero exchange
    std::size_t corridor_ = npos;
};

void sample_direction(const Context& ctx, std::size_t exporter, std::size_t importer, std::size_t n,
                      std::uint64_t seed, const PopulationOptions& opt, LossPopulation& out,
                      std::optional<std::size_t> link = std::nullopt) {
    const PairSampler sampler(ctx, exporter, importer, opt, link);
    const auto& zones = ctx.zn.zones;
    const std::string tag = link ? ctx.net.hvdc_links()[*link].id + ":" : std::string();
    std::vector<std::optional<LossSample>> drawn(n);
    detail::parallel_for(n, opt.jobs, [&](std::size_t i) {
        drawn[i] = sampler.draw(sample_seed(seed, tag + zones[exporter], zones[importer], i));
    });
    for (auto& s : drawn) {
        ++out.attempted;
        if (s)
            out.samples.push_back(std::move(*s));
        else
            ++out.dropped;
    }
}

void check_drop_rate(const LossPopulation& p, const PopulationOptions& opt) {
    if (p.attempted && static_cast<double>(p.dropped) > opt.max_drop_rate * static_cast<double>(p.attempted)) {
        std::ostringstream os;
        os << "calibration: " << p.dropped << " of " << p.attempted
           << " AC power flows diverged, above the allowed drop rate " << opt.max_drop_rate;
        throw CalibrationError(os.str());
    }
}

// Pair losses as a function of |corridor flow|.
class PairLookup {
public:
    explicit PairLookup(const LossPopulation& pop) {
        for (const auto& s : pop.samples) pts_.emplace_back(std::abs(s.flow), s.loss);
        std::sort(pts_.begin(), pts_.end());
    }

    // Nearest neighbour within `window`; otherwise interpolation through the
    // origin and quadratic growth past the largest sample.
    double operator()(double flow, double window, bool& interpolated) const {
        const double x = std::abs(flow);
        interpolated = false;
        if (pts_.empty()) return 0.0;
        auto it = std::lower_bound(pts_.begin(), pts_.end(), std::make_pair(x, -std::numeric_limits<double>::infinity()));
        double best = std::numeric_limits<double>::infinity(), value = 0.0;
        for (auto c : {it, it == pts_.begin() ? it : std::prev(it)}) {
            if (c == pts_.end()) continue;
            const double dist = std::abs(c->first - x);
            if (dist < best) best = dist, value = c->second;
        }
        if (best <= window) return value;
        interpolated = true;
        if (it == pts_.end()) {
            const auto& [xm, ym] = pts_.back();
            return xm > 0.0 ? ym * (x / xm) * (x / xm) : ym;
        }
        const auto [x1, y1] = it == pts_.begin() ? std::make_pair(0.0, 0.0) : *std::prev(it);
        const auto [x2, y2] = *it;
        return x2 > x1 ? y1 + (y2 - y1) * (x - x1) / (x2 - x1) : y2;
    }

private:
    std::vector<std::pair<double, double>> pts_;
};

}  // namespace

LossPopulation interzonal_loss_population(const Network& net, const ZoneMap& zone_map, const std::string& zone_a,
                                          const std::string& zone_b, std::size_t n, std::uint64_t seed,
                                          const PopulationOptions& opt) {
    if (n == 0) throw std::invalid_argument("interzonal_loss_population: n must be at least 1");
    if (zone_a == zone_b) throw std::invalid_argument("interzonal_loss_population: zones must differ");
    const auto ctx = make_context(net, zone_map);
    const auto a = ctx.zn.zone_index(zone_a), b = ctx.zn.zone_index(zone_b);
    LossPopulation out;
    sample_direction(ctx, a, b, n, seed, opt, out);
    sample_direction(ctx, b, a, n, seed, opt, out);
    check_drop_rate(out, opt);
    return out;
}

LossPopulation hvdc_loss_population(const Network& net, const ZoneMap& zone_map, const std::string& link_id,
                                    std::size_t n, std::uint64_t seed, const PopulationOptions& opt) {
    if (n == 0) throw std::invalid_argument("hvdc_loss_population: n must be at least 1");
    const auto& links = net.hvdc_links();
    const auto it = std::find_if(links.begin(), links.end(), [&](const HVDCLink& l) { return l.id == link_id; });
    if (it == links.end()) throw std::invalid_argument("hvdc_loss_population: unknown HVDC link " + link_id);
    const auto k = static_cast<std::size_t>(it - links.begin());
    const auto ctx = make_context(net, zone_map);
    const auto a = ctx.zn.zone_of_bus[net.bus_index(it->from)], b = ctx.zn.zone_of_bus[net.bus_index(it->to)];
    LossPopulation out;
    sample_direction(ctx, a, b, n, seed, opt, out, k);
    sample_direction(ctx, b, a, n, seed, opt, out, k);
    check_drop_rate(out, opt);
    return out;
}

LossPopulation system_loss_population(const Network& net, const ZoneMap& zone_map, std::size_t n, std::uint64_t seed,
                                      const PopulationOptions& opt) {
    if (n == 0) throw std::invalid_argument("system_loss_population: n must be at least 1");
    const auto ctx = make_context(net, zone_map);
    LossPopulation out;
    const std::size_t nz = ctx.zn.zones.size();
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = a + 1; b < nz; ++b) {
            const auto ca = ctx.zone_component[a];
            if (ca >= npos - 1 || ca != ctx.zone_component[b]) continue;
            sample_direction(ctx, a, b, n, seed, opt, out);
            sample_direction(ctx, b, a, n, seed, opt, out);
        }
    if (out.attempted == 0) throw CalibrationError("system_loss_population: no AC-connected zone pairs");
    check_drop_rate(out, opt);
    return out;
}

CorrectionFactor correction_factor(const Network& net, const ZoneMap& zone_map,
                                   const std::map<std::string, LossPopulation>& pairs, const LossPopulation& system,
                                   double window) {
    if (pairs.empty() || system.samples.empty()) throw CalibrationError("correction_factor: empty population");
    const auto zn = reduce_to_zonal(net, zone_map);
    std::vector<std::optional<PairLookup>> lookup(zn.corridors.size());
    for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
        auto it = pairs.find(zn.corridors[c].id);
        if (it != pairs.end()) {
            if (it->second.samples.empty())
                throw CalibrationError("correction_factor: empty population for corridor " + it->first);
            lookup[c].emplace(it->second);
        }
    }

    CorrectionFactor cf;
    std::vector<double> L, S;
    for (const auto& s : system.samples) {
        if (s.corridor_flows.size() != zn.corridors.size())
            throw CalibrationError("correction_factor: sample does not match the zonal reduction");
        double sum = 0.0;
        for (std::size_t c = 0; c < zn.corridors.size(); ++c) {
            if (std::abs(s.corridor_flows[c]) < 1e-12) continue;
            if (!lookup[c])
                throw CalibrationError("correction_factor: no pairwise population for corridor " + zn.corridors[c].id);
            bool interp = false;
            sum += (*lookup[c])(s.corridor_flows[c], window, interp);
            cf.interpolated += interp;
        }
        L.push_back(s.loss);
        S.push_back(sum);
    }
    cf.scenarios = L.size();

    auto ratio = [&](auto&& keep) {
        double ls = 0.0, ss = 0.0;
        for (std::size_t k = 0; k < L.size(); ++k)
            if (keep(k)) ls += L[k] * S[k], ss += S[k] * S[k];
        return ss > 0.0 ? std::optional<double>(ls / ss) : std::nullopt;
    };
    double largest = 0.0;
    for (double v : S) largest = std::max(largest, std::abs(v));
    const auto raw = ratio([](std::size_t) { return true; });
    if (!raw || largest < 1e-12) throw CalibrationError("correction_factor: degenerate fit, all superposed pairwise losses are zero");
    if (*raw <= 0.0) throw CalibrationError("correction_factor: non-positive ratio fit");
    cf.raw_gamma = *raw;
    cf.gamma = std::min(1.0, *raw);

    double mean = 0.0;
    for (double v : L) mean += v;
    mean /= static_cast<double>(L.size());
    double res = 0.0, tot = 0.0;
    for (std::size_t k = 0; k < L.size(); ++k) {
        res += (L[k] - *raw * S[k]) * (L[k] - *raw * S[k]);
        tot += (L[k] - mean) * (L[k] - mean);
    }
    cf.r_squared = tot > 0.0 ? 1.0 - res / tot : (res <= 1e-24 ? 1.0 : 0.0);

    for (const auto& z : zn.zones) {
        const auto r = ratio([&](std::size_t k) {
            const auto& s = system.samples[k];
            return s.exporter != z && s.importer != z;
        });
        if (r) cf.transit[z] = *r;
    }
    return cf;
}

QuadraticLoss fit_loss_quadratic(const std::vector<double>& flow, const std::vector<double>& loss) {
    if (flow.size() != loss.size() || flow.empty()) throw CalibrationError("fit_loss_quadratic: bad sample vectors");
    const auto m = static_cast<Eigen::Index>(flow.size());
    Eigen::MatrixXd X(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x = std::abs(flow[static_cast<std::size_t>(i)]);
        X(i, 0) = x * x;
        X(i, 1) = x;
        X(i, 2) = 1.0;
        y[i] = loss[static_cast<std::size_t>(i)];
    }
    // Convex, non-decreasing and non-negative in |f|: A, B, C >= 0. Small
    // enough to enumerate every active set.
    QuadraticLoss best;
    double best_sse = y.squaredNorm();
    for (const auto& cols : {std::vector<int>{0, 1, 2}, {0, 1}, {0, 2}, {1, 2}, {0}, {1}, {2}}) {
        Eigen::MatrixXd Xs(m, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) Xs.col(static_cast<Eigen::Index>(k)) = X.col(cols[k]);
        const Eigen::VectorXd c = Xs.colPivHouseholderQr().solve(y);
        double coef[3] = {0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < cols.size(); ++k) coef[cols[k]] = c[static_cast<Eigen::Index>(k)];
        if (coef[0] < 0.0 || coef[1] < 0.0 || coef[2] < 0.0) continue;
        const double sse = (Xs * c - y).squaredNorm();
        if (sse < best_sse * (1.0 - 1e-12)) best_sse = sse, best = {coef[0], coef[1], coef[2]};
    }
    return best;
}

LossModel calibrate_loss_factors(const std::vector<LossSample>& samples, double gamma, LossKind kind,
                                 double capacity, std::size_t segments, CalibrationTarget target,
                                 std::string line_id) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("calibrate_loss_factors: gamma must be in (0, 1]");
    if (!(capacity > 0.0)) throw std::invalid_argument("calibrate_loss_factors: capacity must be positive");
    if (kind == LossKind::Constant) throw std::invalid_argument("calibrate_loss_factors: kind must be linear or piecewise");
    const std::size_t k = kind == LossKind::Linear ? 1 : segments;
    if (k == 0) throw std::invalid_argument("calibrate_loss_factors: at least one segment");

    std::vector<double> x, y;
    double reach = 0.0;
    for (const auto& s : samples) {
        x.push_back(std::abs(s.flow));
        y.push_back(gamma * (target == CalibrationTarget::TotalLoss ? s.loss : s.line_loss));
        reach = std::max(reach, x.back());
    }
    if (samples.size() < 2 * k + 2 || reach < 0.5 * capacity) {
        std::ostringstream os;
        os << "calibrate_loss_factors: insufficient flow coverage (" << samples.size() << " samples reaching "
           << reach << " p.u.; need " << 2 * k + 2 << " reaching " << 0.5 * capacity << ")";
        throw CalibrationError(os.str());
    }
    const auto q = fit_loss_quadratic(x, y);
    // A flat surrogate would pick up round-off slopes of either sign.
    if (q.a == 0.0 && q.b == 0.0) return LossModel::from_coefficients(std::move(line_id), kind, {{0.0, q.c}}, capacity);
    auto model = kind == LossKind::Linear ? fit_linear(q, LeastSquares{0.0, capacity}, capacity, std::move(line_id))
                                          : fit_piecewise(q, capacity, k, SegmentFit::LeastSquares, std::move(line_id));
    validate(model);
    return model;
}

std::string samples_to_csv(const LossPopulation& p) {
    std::ostringstream os;
    os.precision(12);
    os << "pair,direction,flow_pu,exchange_pu,loss_pu,line_loss_pu,seed\n";
    for (const auto& s : p.samples)
        os << (s.corridor.empty() ? s.exporter + "-" + s.importer : s.corridor) << ',' << s.exporter << '>'
           << s.importer << ',' << s.flow << ',' << s.exchange << ',' << s.loss << ',' << s.line_loss << ','
           << s.seed << '\n';
    return os.str();
}

}  // namespace lossy
