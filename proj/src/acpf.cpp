#include "lossy/acpf.hpp"

#include <cmath>
#include <complex>
#include <iostream>

namespace lossy {

namespace {

using cd = std::complex<double>;

struct Admittance {
    Eigen::MatrixXcd y;
    std::vector<cd> series;
    std::vector<double> shunt_half;
};

Admittance build_ybus(const Network& net) {
    const auto n = static_cast<Eigen::Index>(net.buses().size());
    Admittance a;
    a.y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& l : net.ac_lines()) {
        const auto f = static_cast<Eigen::Index>(net.bus_index(l.from));
        const auto t = static_cast<Eigen::Index>(net.bus_index(l.to));
        const cd ys = 1.0 / cd(l.resistance, 1.0 / l.susceptance);
        const cd sh(0.0, 0.5 * l.shunt_susceptance);
        a.y(f, f) += ys + sh;
        a.y(t, t) += ys + sh;
        a.y(f, t) -= ys;
        a.y(t, f) -= ys;
        a.series.push_back(ys);
        a.shunt_half.push_back(0.5 * l.shunt_susceptance);
    }
    return a;
}

}  // namespace

double ACPFSolution::total_loss() const {
    double s = 0.0;
    for (double v : line_loss) s += v;
    return s;
}

ACPFSolution solve_acpf(const Network& net, const AcpfSetpoints& sp, const AcpfOptions& opt) {
    const std::size_t nb = net.buses().size();
    const auto N = static_cast<Eigen::Index>(nb);
    if (sp.p.size() != N || sp.q.size() != N || sp.v.size() != N || sp.pv.size() != nb)
        throw std::invalid_argument("solve_acpf: setpoint vectors must have one entry per bus");
    if (!sp.frozen.empty() && sp.frozen.size() != nb) throw std::invalid_argument("solve_acpf: frozen mask size");

    std::vector<bool> slack(nb, false);
    for (auto s : net.slack_buses()) slack[s] = true;
    auto frozen = [&](std::size_t i) { return !sp.frozen.empty() && sp.frozen[i]; };
    std::vector<Eigen::Index> pvpq, pq;
    for (std::size_t i = 0; i < nb; ++i) {
        if (slack[i] || frozen(i)) continue;
        pvpq.push_back(static_cast<Eigen::Index>(i));
        if (!sp.pv[i]) pq.push_back(static_cast<Eigen::Index>(i));
    }
    const auto npv = static_cast<Eigen::Index>(pvpq.size()), npq = static_cast<Eigen::Index>(pq.size());

    const auto Y = build_ybus(net);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(N), va = Eigen::VectorXd::Zero(N);
    for (std::size_t i = 0; i < nb; ++i)
        if ((slack[i] || sp.pv[i]) && !frozen(i)) vm[static_cast<Eigen::Index>(i)] = sp.v[static_cast<Eigen::Index>(i)];

    ACPFSolution sol;
    Eigen::VectorXcd V(N), I(N), S(N);
    Eigen::VectorXd F(npv + npq);
    auto evaluate = [&] {
        for (Eigen::Index i = 0; i < N; ++i) V[i] = std::polar(vm[i], va[i]);
        I = Y.y * V;
        S = V.cwiseProduct(I.conjugate());
        for (Eigen::Index k = 0; k < npv; ++k) F[k] = S[pvpq[k]].real() - sp.p[pvpq[k]];
        for (Eigen::Index k = 0; k < npq; ++k) F[npv + k] = S[pq[k]].imag() - sp.q[pq[k]];
        return F.size() ? F.cwiseAbs().maxCoeff() : 0.0;
    };

    double mis = evaluate();
    sol.mismatch_history.push_back(mis);
    int it = 0;
    while (mis > opt.tolerance) {
        if (it >= opt.max_iterations || !std::isfinite(mis) || mis > 1e8) {
            std::string msg = "ACPF did not converge after " + std::to_string(it) + " iterations (mismatch history:";
            for (double h : sol.mismatch_history) msg += " " + std::to_string(h);
            throw DivergenceError(msg + ")", sol.mismatch_history);
        }
        // dS/dva and dS/dvm in complex form, then the real Jacobian blocks.
        const Eigen::VectorXcd Vn = V.cwiseQuotient(vm.cast<cd>());
        const Eigen::MatrixXcd dVa = cd(0, 1) * V.asDiagonal() * (Eigen::MatrixXcd(I.asDiagonal()) - Y.y * V.asDiagonal()).conjugate();
        const Eigen::MatrixXcd dVm = V.asDiagonal() * (Y.y * Vn.asDiagonal()).conjugate() +
                                     Eigen::MatrixXcd(I.conjugate().asDiagonal()) * Vn.asDiagonal();
        Eigen::MatrixXd J(npv + npq, npv + npq);
        for (Eigen::Index r = 0; r < npv; ++r) {
            for (Eigen::Index c = 0; c < npv; ++c) J(r, c) = dVa(pvpq[r], pvpq[c]).real();
            for (Eigen::Index c = 0; c < npq; ++c) J(r, npv + c) = dVm(pvpq[r], pq[c]).real();
        }
        for (Eigen::Index r = 0; r < npq; ++r) {
            for (Eigen::Index c = 0; c < npv; ++c) J(npv + r, c) = dVa(pq[r], pvpq[c]).imag();
            for (Eigen::Index c = 0; c < npq; ++c) J(npv + r, npv + c) = dVm(pq[r], pq[c]).imag();
        }
        const Eigen::VectorXd dx = J.partialPivLu().solve(-F);
        // Full Newton step unless it increases ||F||; then halve it.
        const double norm0 = F.norm();
        const Eigen::VectorXd va0 = va, vm0 = vm;
        for (double step = 1.0;; step *= 0.5) {
            for (Eigen::Index k = 0; k < npv; ++k) va[pvpq[k]] = va0[pvpq[k]] + step * dx[k];
            for (Eigen::Index k = 0; k < npq; ++k) vm[pq[k]] = vm0[pq[k]] + step * dx[npv + k];
            mis = evaluate();
            if (F.norm() <= norm0 || step < 1.0 / 64) break;
        }
        ++it;
        sol.mismatch_history.push_back(mis);
        if (opt.trace) std::cerr << "acpf iter " << it << " mismatch " << mis << "\n";
    }

    sol.converged = true;
    sol.iterations = it;
    sol.max_mismatch = mis;
    sol.vm = vm;
    sol.va = va;
    sol.p_injection = S.real();
    sol.q_injection = S.imag();
    for (std::size_t l = 0; l < net.ac_lines().size(); ++l) {
        const auto& line = net.ac_lines()[l];
        const auto f = static_cast<Eigen::Index>(net.bus_index(line.from));
        const auto t = static_cast<Eigen::Index>(net.bus_index(line.to));
        const cd sh(0.0, Y.shunt_half[l]);
        const cd i_f = (Y.series[l] + sh) * V[f] - Y.series[l] * V[t];
        const cd i_t = (Y.series[l] + sh) * V[t] - Y.series[l] * V[f];
        const cd s_f = V[f] * std::conj(i_f), s_t = V[t] * std::conj(i_t);
        sol.p_from.push_back(s_f.real());
        sol.q_from.push_back(s_f.imag());
        sol.p_to.push_back(s_t.real());
        sol.q_to.push_back(s_t.imag());
        sol.line_loss.push_back(s_f.real() + s_t.real());
    }
    return sol;
}

AcpfSetpoints setpoints_from_dispatch(const Network& net, const std::vector<double>& g, const std::vector<double>& d,
                                      const Eigen::VectorXd& extra, double pf) {
    const auto N = static_cast<Eigen::Index>(net.buses().size());
    if (g.size() != net.generators().size() || d.size() != net.loads().size())
        throw std::invalid_argument("setpoints_from_dispatch: dispatch does not match the network");
    AcpfSetpoints sp;
    sp.p = extra.size() ? extra : Eigen::VectorXd::Zero(N);
    sp.q = Eigen::VectorXd::Zero(N);
    sp.v = Eigen::VectorXd::Ones(N);
    sp.pv.assign(net.buses().size(), false);
    const double tan_phi = std::tan(std::acos(pf));
    for (std::size_t j = 0; j < g.size(); ++j) {
        const auto b = net.bus_index(net.generators()[j].bus);
        sp.p[static_cast<Eigen::Index>(b)] += g[j];
        sp.pv[b] = true;
    }
    for (std::size_t j = 0; j < d.size(); ++j) {
        const auto b = static_cast<Eigen::Index>(net.bus_index(net.loads()[j].bus));
        sp.p[b] -= d[j];
        sp.q[b] -= d[j] * tan_phi;
    }
    return sp;
}

OfflineLosses losses_from_dispatch(const Network& net, const MarketOutcome& o, const AcpfOptions& opt) {
    const std::size_t nb = net.buses().size();
    const auto& links = net.hvdc_links();
    OfflineLosses out;
    out.ac.assign(net.ac_lines().size(), 0.0);
    out.dc.assign(links.size(), 0.0);
    out.node.assign(nb, 0.0);
    if (o.dc_ids.size() != links.size()) throw std::invalid_argument("losses_from_dispatch: HVDC links do not match");

    Eigen::VectorXd extra = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
    for (std::size_t k = 0; k < links.size(); ++k) {
        const double f = o.f_dc[k];
        out.dc[k] = links[k].loss_params(f);
        const auto a = static_cast<Eigen::Index>(net.bus_index(links[k].from));
        const auto b = static_cast<Eigen::Index>(net.bus_index(links[k].to));
        extra[a] += -f - 0.5 * out.dc[k];
        extra[b] += f - 0.5 * out.dc[k];
    }

    // Components without resistance lose no active power; skip them.
    std::vector<bool> lossy_comp(net.component_count(), false);
    for (const auto& l : net.ac_lines())
        if (l.resistance != 0.0) lossy_comp[net.component_of_bus()[net.bus_index(l.from)]] = true;
    if (std::find(lossy_comp.begin(), lossy_comp.end(), true) != lossy_comp.end()) {
        auto sp = setpoints_from_dispatch(net, o.g, o.d, extra);
        sp.frozen.resize(nb);
        for (std::size_t i = 0; i < nb; ++i) sp.frozen[i] = !lossy_comp[net.component_of_bus()[i]];
        const auto sol = solve_acpf(net, sp, opt);
        out.acpf_iterations = sol.iterations;
        for (std::size_t l = 0; l < out.ac.size(); ++l)
            if (lossy_comp[net.component_of_bus()[net.bus_index(net.ac_lines()[l].from)]]) out.ac[l] = sol.line_loss[l];
    }
    for (std::size_t l = 0; l < out.ac.size(); ++l) {
        out.node[net.bus_index(net.ac_lines()[l].from)] += 0.5 * out.ac[l];
        out.node[net.bus_index(net.ac_lines()[l].to)] += 0.5 * out.ac[l];
    }
    for (std::size_t k = 0; k < links.size(); ++k) {
        out.node[net.bus_index(links[k].from)] += 0.5 * out.dc[k];
        out.node[net.bus_index(links[k].to)] += 0.5 * out.dc[k];
    }
    return out;
}

ZonalLosses aggregate_losses(const Network& net, const ZonalNetwork& zn, const OfflineLosses& losses) {
    ZonalLosses z;
    z.intra.assign(zn.zones.size(), 0.0);
    std::vector<bool> cross(net.ac_lines().size(), false);
    for (const auto& c : zn.corridors) {
        double s = 0.0;
        for (auto l : c.member_lines) {
            s += losses.ac[l];
            cross[l] = true;
        }
        z.corridor[c.id] = s;
    }
    for (std::size_t l = 0; l < net.ac_lines().size(); ++l)
        if (!cross[l]) z.intra[zn.zone_of_bus[net.bus_index(net.ac_lines()[l].from)]] += losses.ac[l];
    for (const auto& link : zn.hvdc_links) z.hvdc[link.id] = losses.dc[link.source_link];
    return z;
}

}  // namespace lossy
