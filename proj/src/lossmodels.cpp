#include "lossy/lossmodels.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace lossy {

namespace {

constexpr std::size_t kGridPoints = 1001;
constexpr double kContinuityTol = 1e-9;

std::vector<double> grid(double lo, double hi, std::size_t n = kGridPoints) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

std::pair<double, double> fit_segment(const QuadraticLoss& q, double lo, double hi, SegmentFit method) {
    switch (method) {
        case SegmentFit::Chord: {
            const double alpha = (q(hi) - q(lo)) / (hi - lo);
            return {alpha, q(lo) - alpha * lo};
        }
        case SegmentFit::Tangent: {
            const double mid = 0.5 * (lo + hi);
            const double alpha = q.slope(mid);
            return {alpha, q(mid) - alpha * mid};
        }
        case SegmentFit::LeastSquares:
        default: {
            const auto x = grid(lo, hi);
            std::vector<double> y(x.size());
            std::transform(x.begin(), x.end(), y.begin(), [&](double f) { return q(f); });
            return least_squares_line(x, y);
        }
    }
}

// Drops pieces whose slope equals the next one; they add no kink.
std::vector<std::pair<double, double>> merge_collinear(std::vector<std::pair<double, double>> pieces) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : pieces) {
        if (!out.empty() && std::abs(out.back().first - p.first) <= 1e-12 &&
            std::abs(out.back().second - p.second) <= 1e-12)
            continue;
        out.push_back(p);
    }
    return out;
}

bool breakpoints_valid(const LossModel& m) {
    try {
        validate(m);
        return true;
    } catch (const FitError&) {
        return false;
    }
}

}  // namespace

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Constant: return "constant";
        case LossKind::Linear: return "linear";
        case LossKind::Piecewise: return "pwl";
    }
    return "?";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "constant") return LossKind::Constant;
    if (s == "linear") return LossKind::Linear;
    if (s == "pwl" || s == "piecewise") return LossKind::Piecewise;
    throw std::invalid_argument("unknown loss kind '" + s + "'");
}

std::size_t LossModel::segment_at(double flow) const {
    const double m = std::abs(flow);
    for (std::size_t k = 0; k + 1 < segments.size(); ++k)
        if (m <= segments[k].f_star) return k;
    return segments.size() - 1;
}

double LossModel::eval(double flow) const {
    const auto& s = segments[segment_at(flow)];
    return s.alpha * std::abs(flow) + s.beta;
}

double LossModel::epigraph_value(double flow) const {
    double best = -INFINITY;
    for (const auto& s : segments) best = std::max({best, s.alpha * flow + s.beta, -s.alpha * flow + s.beta});
    return best;
}

LossModel LossModel::from_coefficients(std::string line_id, LossKind kind,
                                       const std::vector<std::pair<double, double>>& alpha_beta,
                                       double capacity) {
    LossModel m;
    m.line_id = std::move(line_id);
    m.kind = kind;
    for (std::size_t k = 0; k < alpha_beta.size(); ++k) {
        LossSegment s{alpha_beta[k].first, alpha_beta[k].second, capacity};
        if (k + 1 < alpha_beta.size()) {
            const auto& next = alpha_beta[k + 1];
            s.f_star = (s.beta - next.second) / (next.first - s.alpha);
        }
        m.segments.push_back(s);
    }
    return m;
}

void validate(const LossModel& m, double capacity_tolerance) {
    const std::string who = "loss model '" + m.line_id + "'";
    if (m.segments.empty()) throw FitError(who + ": no segments");
    if (m.kind == LossKind::Constant && (m.segments.size() != 1 || m.segments[0].alpha != 0.0))
        throw FitError(who + ": constant kind needs exactly one segment with alpha = 0");
    if (m.kind == LossKind::Linear && m.segments.size() != 1)
        throw FitError(who + ": linear kind needs exactly one segment");
    if (m.segments.front().alpha < 0.0) throw FitError(who + ": negative first slope breaks convexity in |f|");
    double prev_break = 0.0;
    for (std::size_t k = 0; k < m.segments.size(); ++k) {
        const auto& s = m.segments[k];
        if (!std::isfinite(s.alpha) || !std::isfinite(s.beta) || !std::isfinite(s.f_star))
            throw FitError(who + ": non-finite coefficient in segment " + std::to_string(k + 1));
        if (!(s.f_star > prev_break - capacity_tolerance))
            throw FitError(who + ": breakpoints not increasing at segment " + std::to_string(k + 1));
        prev_break = s.f_star;
        if (k + 1 == m.segments.size()) break;
        const auto& n = m.segments[k + 1];
        if (!(n.alpha > s.alpha))
            throw FitError(who + ": slopes not strictly increasing at segment " + std::to_string(k + 2));
        const double gap = (s.alpha * s.f_star + s.beta) - (n.alpha * s.f_star + n.beta);
        if (std::abs(gap) > kContinuityTol)
            throw FitError(who + ": discontinuous at breakpoint " + std::to_string(k + 1));
    }
}

std::pair<double, double> least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw FitError("least squares: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("least squares: all points share one abscissa");
    const double alpha = sxy / sxx;
    return {alpha, my - alpha * mx};
}

LossModel fit_constant(const QuadraticLoss& q, double anchor, double capacity, std::string line_id) {
    if (anchor < 0.0 || anchor > capacity) throw FitError("fit_constant: anchor outside [0, capacity]");
    LossModel m;
    m.line_id = std::move(line_id);
    m.kind = LossKind::Constant;
    m.segments = {{0.0, q(anchor), capacity}};
    return m;
}

LossModel fit_linear(const QuadraticLoss& q, const LinearFit& method, double capacity, std::string line_id) {
    auto in_range = [&](double f) {
        if (f < 0.0 || f > capacity) throw FitError("fit_linear: fit point outside [0, capacity]");
    };
    std::pair<double, double> ab;
    if (const auto* tp = std::get_if<TwoPoint>(&method)) {
        in_range(tp->f1);
        in_range(tp->f2);
        if (tp->f1 == tp->f2) throw FitError("fit_linear: degenerate two-point fit (f1 == f2)");
        const double alpha = (q(tp->f2) - q(tp->f1)) / (tp->f2 - tp->f1);
        ab = {alpha, q(tp->f1) - alpha * tp->f1};
    } else if (const auto* ls = std::get_if<LeastSquares>(&method)) {
        in_range(ls->lo);
        in_range(ls->hi);
        if (!(ls->hi > ls->lo)) throw FitError("fit_linear: degenerate least-squares range");
        ab = fit_segment(q, ls->lo, ls->hi, SegmentFit::LeastSquares);
    } else {
        const double f0 = std::get<Tangent>(method).f0;
        in_range(f0);
        const double alpha = q.slope(f0);
        ab = {alpha, q(f0) - alpha * f0};
    }
    LossModel m;
    m.line_id = std::move(line_id);
    m.kind = LossKind::Linear;
    m.segments = {{ab.first, ab.second, capacity}};
    validate(m);
    return m;
}

LossModel fit_piecewise_on(const QuadraticLoss& q, const std::vector<double>& breakpoints, SegmentFit method,
                           std::string line_id) {
    if (breakpoints.empty()) throw FitError("fit_piecewise: need at least one segment");
    const double capacity = breakpoints.back();
    std::vector<std::pair<double, double>> pieces;
    double lo = 0.0;
    for (double hi : breakpoints) {
        if (!(hi > lo)) throw FitError("fit_piecewise: breakpoints must increase from zero");
        pieces.push_back(fit_segment(q, lo, hi, method));
        lo = hi;
    }
    LossModel m = LossModel::from_coefficients(std::move(line_id), LossKind::Piecewise, merge_collinear(pieces),
                                               capacity);
    if (breakpoints_valid(m)) return m;

    // Convexity repair: chords through the nominal breakpoints are always convex.
    pieces.clear();
    lo = 0.0;
    for (double hi : breakpoints) {
        pieces.push_back(fit_segment(q, lo, hi, SegmentFit::Chord));
        lo = hi;
    }
    LossModel repaired =
        LossModel::from_coefficients(m.line_id, LossKind::Piecewise, merge_collinear(pieces), capacity);
    repaired.repaired = true;
    validate(repaired);
    return repaired;
}

LossModel fit_piecewise(const QuadraticLoss& q, double capacity, std::size_t n_segments, SegmentFit method,
                        std::string line_id) {
    if (n_segments == 0) throw FitError("fit_piecewise: n_segments must be >= 1");
    if (!(capacity > 0.0)) throw FitError("fit_piecewise: capacity must be positive");
    std::vector<double> bp(n_segments);
    for (std::size_t k = 0; k < n_segments; ++k)
        bp[k] = capacity * static_cast<double>(k + 1) / static_cast<double>(n_segments);
    bp.back() = capacity;
    return fit_piecewise_on(q, bp, method, std::move(line_id));
}

LossModel fit_piecewise_by_length(const QuadraticLoss& q, double capacity, double segment_length,
                                  SegmentFit method, std::string line_id) {
    if (!(segment_length > 0.0)) throw FitError("fit_piecewise: segment length must be positive");
    std::vector<double> bp;
    for (double x = segment_length; x < capacity - 1e-9; x += segment_length) bp.push_back(x);
    bp.push_back(capacity);
    return fit_piecewise_on(q, bp, method, std::move(line_id));
}

std::vector<EpigraphRow> epigraph_constraints(const LossModel& m) {
    std::vector<EpigraphRow> rows;
    for (std::size_t k = 0; k < m.segments.size(); ++k) {
        const auto& s = m.segments[k];
        const std::string tag = "[" + std::to_string(k + 1) + "," + m.line_id + "]";
        rows.push_back({k, +1, s.alpha, s.beta, "sigma+" + tag});
        // With a zero slope both inequalities coincide.
        if (s.alpha != 0.0) rows.push_back({k, -1, s.alpha, s.beta, "sigma-" + tag});
    }
    return rows;
}

Eigen::MatrixXd distribution_matrix(std::size_t nodes,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& ends) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(ends.size()));
    for (std::size_t l = 0; l < ends.size(); ++l) {
        d(ends[l].first, l) += 0.5;
        d(ends[l].second, l) += 0.5;
    }
    return d;
}

LossDistribution distribution_matrices(const Network& net) {
    std::vector<std::pair<std::size_t, std::size_t>> ac, dc;
    for (const auto& l : net.ac_lines()) ac.emplace_back(net.bus_index(l.from), net.bus_index(l.to));
    for (const auto& l : net.hvdc_links()) dc.emplace_back(net.bus_index(l.from), net.bus_index(l.to));
    return {distribution_matrix(net.buses().size(), ac), distribution_matrix(net.buses().size(), dc)};
}

std::string loss_table_to_csv(const LossTable& table) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "line_id,kind,k,alpha,beta,f_star\n";
    for (const auto& [id, m] : table)
        for (std::size_t k = 0; k < m.segments.size(); ++k)
            os << id << ',' << to_string(m.kind) << ',' << k + 1 << ',' << m.segments[k].alpha << ','
               << m.segments[k].beta << ',' << m.segments[k].f_star << '\n';
    return os.str();
}

LossTable loss_table_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("line_id", 0) != 0)
        throw std::invalid_argument("loss table csv: missing header");
    LossTable table;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw std::invalid_argument("loss table csv: row " + std::to_string(row) + " malformed");
        auto& m = table[cells[0]];
        m.line_id = cells[0];
        m.kind = loss_kind_from_string(cells[1]);
        const auto k = static_cast<std::size_t>(std::stoul(cells[2]));
        if (k != m.segments.size() + 1)
            throw std::invalid_argument("loss table csv: segments of '" + cells[0] + "' out of order");
        m.segments.push_back({std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])});
    }
    for (const auto& [id, m] : table) validate(m, 1e-6);
    return table;
}

}  // namespace lossy
