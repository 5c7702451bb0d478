#include "lossy/lp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <sstream>
#include <string_view>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace lossy::lp {

double Constraint::lower_bound() const {
    switch (relation) {
        case Relation::LessEqual: return -kInf;
        case Relation::Equal:
        case Relation::GreaterEqual: return rhs;
        case Relation::Range: return range_lower;
    }
    return -kInf;
}

double Constraint::upper_bound() const {
    switch (relation) {
        case Relation::GreaterEqual: return kInf;
        default: return rhs;
    }
}

std::size_t LinearProgram::add_variable(std::string name, double lower, double upper, double objective) {
    variables_.push_back({std::move(name), lower, upper, objective});
    return variables_.size() - 1;
}

std::size_t LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Relation relation,
                                          double rhs) {
    if (relation == Relation::Range) throw std::invalid_argument("use add_range for ranged rows");
    constraints_.push_back({std::move(name), std::move(terms), relation, rhs, -kInf});
    return constraints_.size() - 1;
}

std::size_t LinearProgram::add_range(std::string name, std::vector<Term> terms, double lower, double upper) {
    constraints_.push_back({std::move(name), std::move(terms), Relation::Range, upper, lower});
    return constraints_.size() - 1;
}

void LinearProgram::set_bounds(std::size_t var, double lower, double upper) {
    auto& v = variables_.at(var);
    v.lower = lower;
    v.upper = upper;
}

void LinearProgram::check() const {
    for (const auto& v : variables_) {
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInf ||
            v.upper == -kInf)
            throw std::invalid_argument("variable " + v.name + ": invalid bounds");
        if (!std::isfinite(v.objective))
            throw std::invalid_argument("variable " + v.name + ": non-finite objective coefficient");
    }
    for (const auto& c : constraints_) {
        for (const auto& t : c.terms) {
            if (t.var >= variables_.size())
                throw std::invalid_argument("constraint " + c.name + ": unknown variable index");
            if (!std::isfinite(t.coef))
                throw std::invalid_argument("constraint " + c.name + ": non-finite coefficient");
        }
        const double lo = c.lower_bound(), hi = c.upper_bound();
        if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
            throw std::invalid_argument("constraint " + c.name + ": invalid right-hand side");
    }
    if (!std::isfinite(objective_constant_)) throw std::invalid_argument("non-finite objective constant");
}

const char* to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "?";
}

double KktReport::worst() const {
    return std::max({primal_infeasibility, dual_infeasibility, complementarity, duality_gap});
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

double pow2_round(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
    return std::exp2(std::round(std::log2(s)));
}

// FreeZero: nonbasic at 0, either a free variable or strictly inside its bounds.
enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

// Computational form: [A -I] [x; s] = 0 with bounds on x and s. Variable j < n
// is structural, j = n + i is the logical of row i.
class Simplex {
public:
    Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
        m_ = lp.num_constraints();
        n_ = lp.num_variables();
        build_scaled();
    }

    PrimalDualSolution run();

private:
    struct Eta {
        std::size_t row;
        double pivot;
        std::vector<std::pair<std::size_t, double>> entries;  // off-pivot entries of the column
    };

    void build_scaled();
    bool factorize();
    void ftran(Vec& v) const;
    void btran(Vec& v) const;
    void column(std::size_t j, Vec& out) const;
    double dot_column(std::size_t j, const Vec& y) const;
    void recompute_basic_values();
    void reset_to_slack_basis();
    double infeasibility(std::size_t j) const;
    void log_line(const std::string& s);
    [[noreturn]] void fail(const std::string& what);
    PrimalDualSolution extract(Status status);

    const LinearProgram& lp_;
    SolverOptions opt_;
    std::size_t m_ = 0, n_ = 0;

    SpMat a_;                        // scaled structural columns
    std::vector<double> row_scale_;  // r_i
    std::vector<double> col_scale_;  // x_j = col_j * xhat_j
    double cost_scale_ = 1.0;
    double sense_sign_ = 1.0;
    std::vector<double> lo_, up_, cost_;  // size n + m, scaled

    std::vector<double> x_;
    std::vector<VarState> state_;
    std::vector<std::size_t> head_;  // basis position -> variable
    std::vector<std::ptrdiff_t> pos_;  // variable -> basis position or -1

    mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;  // transpose() is non-const
    std::vector<Eta> etas_;
    bool slack_basis_ = true;  // B = -I, no factorization needed

    std::deque<std::string> log_;
    std::size_t iterations_ = 0;
    std::size_t bland_pivots_ = 0;
    std::size_t resets_ = 0;
};

void Simplex::build_scaled() {
    sense_sign_ = lp_.sense() == Sense::Maximize ? -1.0 : 1.0;
    std::vector<Eigen::Triplet<double, int>> trip;
    for (std::size_t i = 0; i < m_; ++i)
        for (const auto& t : lp_.constraints()[i].terms)
            if (t.coef != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(t.var), t.coef);
    a_.resize(static_cast<int>(m_), static_cast<int>(n_));
    a_.setFromTriplets(trip.begin(), trip.end());  // duplicates summed
    a_.makeCompressed();

    row_scale_.assign(m_, 1.0);
    col_scale_.assign(n_, 1.0);
    if (opt_.scale) {
        std::vector<double> rmax(m_, 0.0);
        for (int j = 0; j < a_.outerSize(); ++j)
            for (SpMat::InnerIterator it(a_, j); it; ++it)
                rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
        for (std::size_t i = 0; i < m_; ++i) row_scale_[i] = rmax[i] > 0 ? pow2_round(1.0 / rmax[i]) : 1.0;
        for (int j = 0; j < a_.outerSize(); ++j) {
            double cmax = 0.0;
            for (SpMat::InnerIterator it(a_, j); it; ++it)
                cmax = std::max(cmax, std::abs(it.value()) * row_scale_[it.row()]);
            col_scale_[j] = cmax > 0 ? pow2_round(1.0 / cmax) : 1.0;
        }
        for (int j = 0; j < a_.outerSize(); ++j)
            for (SpMat::InnerIterator it(a_, j); it; ++it) it.valueRef() *= row_scale_[it.row()] * col_scale_[j];
    }

    lo_.resize(n_ + m_);
    up_.resize(n_ + m_);
    cost_.assign(n_ + m_, 0.0);
    double cmax = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        const auto& v = lp_.variables()[j];
        lo_[j] = v.lower / col_scale_[j];
        up_[j] = v.upper / col_scale_[j];
        cost_[j] = sense_sign_ * v.objective * col_scale_[j];
        cmax = std::max(cmax, std::abs(cost_[j]));
    }
    cost_scale_ = opt_.scale && cmax > 0 ? pow2_round(1.0 / cmax) : 1.0;
    for (std::size_t j = 0; j < n_; ++j) cost_[j] *= cost_scale_;
    for (std::size_t i = 0; i < m_; ++i) {
        const auto& c = lp_.constraints()[i];
        lo_[n_ + i] = c.lower_bound() * row_scale_[i];
        up_[n_ + i] = c.upper_bound() * row_scale_[i];
    }
}

void Simplex::column(std::size_t j, Vec& out) const {
    out.setZero(static_cast<Eigen::Index>(m_));
    if (j >= n_) {
        out[static_cast<Eigen::Index>(j - n_)] = -1.0;
        return;
    }
    for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) out[it.row()] = it.value();
}

double Simplex::dot_column(std::size_t j, const Vec& y) const {
    if (j >= n_) return -y[static_cast<Eigen::Index>(j - n_)];
    double s = 0.0;
    for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) s += it.value() * y[it.row()];
    return s;
}

bool Simplex::factorize() {
    etas_.clear();
    slack_basis_ = true;
    for (std::size_t p = 0; p < m_ && slack_basis_; ++p) slack_basis_ = head_[p] == n_ + p;
    if (slack_basis_) return true;
    std::vector<Eigen::Triplet<double, int>> trip;
    for (std::size_t p = 0; p < m_; ++p) {
        const std::size_t j = head_[p];
        if (j >= n_) {
            trip.emplace_back(static_cast<int>(j - n_), static_cast<int>(p), -1.0);
        } else {
            for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it)
                trip.emplace_back(it.row(), static_cast<int>(p), it.value());
        }
    }
    SpMat b(static_cast<int>(m_), static_cast<int>(m_));
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu_.compute(b);
    return lu_.info() == Eigen::Success;
}

// B_k = B_0 E_1 ... E_k, so B_k^{-1} v = E_k^{-1} ... E_1^{-1} B_0^{-1} v.
void Simplex::ftran(Vec& v) const {
    if (slack_basis_) {
        v = -v;
    } else if (m_ > 0) {
        Vec r = lu_.solve(v);
        v.swap(r);
    }
    for (const auto& e : etas_) {
        const double xr = v[static_cast<Eigen::Index>(e.row)] / e.pivot;
        v[static_cast<Eigen::Index>(e.row)] = xr;
        if (xr != 0.0)
            for (const auto& [i, a] : e.entries) v[static_cast<Eigen::Index>(i)] -= a * xr;
    }
}

// B_k^T y = c  ->  y = B_0^{-T} E_1^{-T} ... E_k^{-T} c.
void Simplex::btran(Vec& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double s = v[static_cast<Eigen::Index>(it->row)];
        for (const auto& [i, a] : it->entries) s -= a * v[static_cast<Eigen::Index>(i)];
        v[static_cast<Eigen::Index>(it->row)] = s / it->pivot;
    }
    if (slack_basis_) {
        v = -v;
    } else if (m_ > 0) {
        Vec r = lu_.transpose().solve(v);
        v.swap(r);
    }
}

void Simplex::recompute_basic_values() {
    Vec rhs = Vec::Zero(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
        if (j >= n_) {
            rhs[static_cast<Eigen::Index>(j - n_)] += x_[j];
        } else {
            for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) rhs[it.row()] -= it.value() * x_[j];
        }
    }
    ftran(rhs);
    for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] = rhs[static_cast<Eigen::Index>(p)];
}

void Simplex::reset_to_slack_basis() {
    const std::size_t total = n_ + m_;
    x_.assign(total, 0.0);
    state_.assign(total, VarState::FreeZero);
    pos_.assign(total, -1);
    head_.resize(m_);
    for (std::size_t j = 0; j < n_; ++j) {
        if (lo_[j] < 0.0 && up_[j] > 0.0) {
            // Ranges around zero (flows) start inside, at 0; far fewer phase 1 pivots than a bound.
        } else if (std::isfinite(lo_[j])) {
            state_[j] = VarState::AtLower;
            x_[j] = lo_[j];
        } else if (std::isfinite(up_[j])) {
            state_[j] = VarState::AtUpper;
            x_[j] = up_[j];
        }
    }
    for (std::size_t i = 0; i < m_; ++i) {
        head_[i] = n_ + i;
        pos_[n_ + i] = static_cast<std::ptrdiff_t>(i);
        state_[n_ + i] = VarState::Basic;
    }
    factorize();
    recompute_basic_values();
}

double Simplex::infeasibility(std::size_t j) const {
    if (x_[j] < lo_[j]) return lo_[j] - x_[j];
    if (x_[j] > up_[j]) return x_[j] - up_[j];
    return 0.0;
}

void Simplex::log_line(const std::string& s) {
    log_.push_back(s);
    if (log_.size() > 200) log_.pop_front();
}

void Simplex::fail(const std::string& what) {
    std::ostringstream os;
    for (const auto& l : log_) os << l << '\n';
    throw NumericalError(what, os.str());
}

PrimalDualSolution Simplex::run() {
    const double ptol = opt_.primal_tolerance;
    const double dtol = opt_.dual_tolerance;
    const double pivot_tol = 1e-9;
    const std::size_t total = n_ + m_;
    const std::size_t max_iter =
        opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + n_) + 1000;

    reset_to_slack_basis();

    Vec y(static_cast<Eigen::Index>(m_)), alpha(static_cast<Eigen::Index>(m_));
    std::vector<double> phase_cost(total, 0.0);
    std::vector<double> d(total, 0.0);
    std::size_t degenerate_run = 0;
    bool bland = false;

    for (;;) {
        if (iterations_ >= max_iter) fail("simplex iteration limit reached");

        // Phase selection: composite phase 1 whenever some basic variable is out of bounds.
        double sum_inf = 0.0;
        for (std::size_t p = 0; p < m_; ++p) {
            const double v = infeasibility(head_[p]);
            if (v > ptol) sum_inf += v;
        }
        const bool phase1 = sum_inf > 0.0;
        for (std::size_t p = 0; p < m_; ++p) {
            const std::size_t j = head_[p];
            if (phase1) {
                phase_cost[j] = x_[j] < lo_[j] - ptol ? -1.0 : (x_[j] > up_[j] + ptol ? 1.0 : 0.0);
            } else {
                phase_cost[j] = cost_[j];
            }
        }
        for (std::size_t p = 0; p < m_; ++p) y[static_cast<Eigen::Index>(p)] = phase_cost[head_[p]];
        btran(y);

        // Pricing: Dantzig, lowest index on ties; Bland picks the first eligible.
        std::size_t enter = total;
        int dir = 0;
        double best = 0.0;
        for (std::size_t j = 0; j < total; ++j) {
            if (state_[j] == VarState::Basic) continue;
            const double cj = phase1 ? 0.0 : cost_[j];
            const double dj = cj - dot_column(j, y);
            d[j] = dj;
            int dj_dir = 0;
            if (dj < -dtol && (state_[j] == VarState::AtLower || state_[j] == VarState::FreeZero) &&
                up_[j] > lo_[j])
                dj_dir = +1;
            else if (dj > dtol && (state_[j] == VarState::AtUpper || state_[j] == VarState::FreeZero) &&
                     up_[j] > lo_[j])
                dj_dir = -1;
            if (!dj_dir) continue;
            if (bland) {
                enter = j;
                dir = dj_dir;
                break;
            }
            if (std::abs(dj) > best) {
                best = std::abs(dj);
                enter = j;
                dir = dj_dir;
            }
        }

        if (enter == total) {
            // No improving direction; confirm on a fresh factorization before concluding.
            if (!etas_.empty()) {
                if (!factorize()) fail("singular basis at refactorization");
                recompute_basic_values();
                bland = false;
                continue;
            }
            if (phase1) return extract(Status::Infeasible);
            return extract(Status::Optimal);
        }

        column(enter, alpha);
        ftran(alpha);

        // Ratio test. Basic x changes by -dir * alpha * theta.
        const double relax = bland ? 0.0 : ptol;
        double theta_max = kInf;
        struct Cand {
            std::size_t p;
            double ratio;
            double piv;
            bool to_upper;
        };
        std::vector<Cand> cands;
        for (std::size_t p = 0; p < m_; ++p) {
            const double a = alpha[static_cast<Eigen::Index>(p)];
            if (std::abs(a) < pivot_tol) continue;
            const std::size_t j = head_[p];
            const double delta = -dir * a;
            const double xj = x_[j];
            double target;
            bool to_upper;
            double rel = relax;
            if (delta < 0) {
                // Decreasing: blocks at lower, or at upper when currently above it (phase 1).
                if (phase1 && xj > up_[j] + ptol) {
                    target = up_[j];
                    rel = 0.0;
                    to_upper = true;
                } else if (phase1 && xj < lo_[j] - ptol) {
                    continue;
                } else if (std::isfinite(lo_[j])) {
                    target = lo_[j];
                    to_upper = false;
                } else {
                    continue;
                }
                const double r = (xj - target) / -delta;
                theta_max = std::min(theta_max, (xj - target + rel) / -delta);
                cands.push_back({p, r, std::abs(a), to_upper});
            } else {
                if (phase1 && xj < lo_[j] - ptol) {
                    target = lo_[j];
                    rel = 0.0;
                    to_upper = false;
                } else if (phase1 && xj > up_[j] + ptol) {
                    continue;
                } else if (std::isfinite(up_[j])) {
                    target = up_[j];
                    to_upper = true;
                } else {
                    continue;
                }
                const double r = (target - xj) / delta;
                theta_max = std::min(theta_max, (target - xj + rel) / delta);
                cands.push_back({p, r, std::abs(a), to_upper});
            }
        }

        const double flip = dir > 0 ? up_[enter] - x_[enter] : x_[enter] - lo_[enter];  // inf if unbounded that way
        std::size_t leave_pos = m_;
        double theta = 0.0;
        bool leave_upper = false;
        if (bland) {
            double rmin = kInf;
            for (const auto& c : cands) rmin = std::min(rmin, std::max(c.ratio, 0.0));
            std::size_t best_var = total;
            for (const auto& c : cands) {
                if (std::max(c.ratio, 0.0) <= rmin + 1e-12 && head_[c.p] < best_var) {
                    best_var = head_[c.p];
                    leave_pos = c.p;
                    leave_upper = c.to_upper;
                }
            }
            theta = rmin;
        } else {
            double piv = 0.0;
            for (const auto& c : cands) {
                if (c.ratio <= theta_max &&
                    (c.piv > piv || (c.piv == piv && leave_pos < m_ && head_[c.p] < head_[leave_pos]))) {
                    piv = c.piv;
                    leave_pos = c.p;
                    leave_upper = c.to_upper;
                    theta = std::max(c.ratio, 0.0);
                }
            }
        }

        if (flip <= theta || (leave_pos == m_ && std::isfinite(flip))) {
            // Bound flip of the entering variable; basis unchanged.
            theta = flip;
            for (std::size_t p = 0; p < m_; ++p)
                x_[head_[p]] -= dir * alpha[static_cast<Eigen::Index>(p)] * theta;
            if (dir > 0) {
                x_[enter] = up_[enter];
                state_[enter] = VarState::AtUpper;
            } else {
                x_[enter] = lo_[enter];
                state_[enter] = VarState::AtLower;
            }
            ++iterations_;
            degenerate_run = 0;
            bland = false;
            continue;
        }
        if (leave_pos == m_) {
            if (phase1) fail("phase 1 ray without blocking variable");
            return extract(Status::Unbounded);
        }

        const std::size_t leave = head_[leave_pos];
        for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] -= dir * alpha[static_cast<Eigen::Index>(p)] * theta;
        x_[enter] += dir * theta;
        x_[leave] = leave_upper ? up_[leave] : lo_[leave];
        state_[leave] = leave_upper ? VarState::AtUpper : VarState::AtLower;
        if (!std::isfinite(x_[leave])) fail("leaving variable has no finite bound");
        pos_[leave] = -1;
        head_[leave_pos] = enter;
        pos_[enter] = static_cast<std::ptrdiff_t>(leave_pos);
        state_[enter] = VarState::Basic;

        Eta eta{leave_pos, alpha[static_cast<Eigen::Index>(leave_pos)], {}};
        for (std::size_t p = 0; p < m_; ++p) {
            const double a = alpha[static_cast<Eigen::Index>(p)];
            if (p != leave_pos && a != 0.0) eta.entries.emplace_back(p, a);
        }
        etas_.push_back(std::move(eta));

        ++iterations_;
        if (bland) ++bland_pivots_;
        if (theta <= ptol) {
            if (++degenerate_run >= opt_.degenerate_limit) bland = true;
        } else {
            degenerate_run = 0;
            bland = false;
        }

        if (iterations_ % 50 == 0 || bland) {
            std::ostringstream os;
            os << "it " << iterations_ << (phase1 ? " p1" : " p2") << " enter " << enter << " leave " << leave
               << " theta " << theta << " pivot " << alpha[static_cast<Eigen::Index>(leave_pos)]
               << " sinf " << sum_inf;
            log_line(os.str());
        }

        if (etas_.size() >= opt_.refactor_interval) {
            if (!factorize()) {
                if (++resets_ > 3) fail("singular basis at refactorization");
                log_line("singular basis, restarting from slack basis");
                reset_to_slack_basis();
                continue;
            }
            recompute_basic_values();
        }
    }
}

PrimalDualSolution Simplex::extract(Status status) {
    PrimalDualSolution sol;
    sol.status = status;
    sol.iterations = iterations_;
    sol.bland_pivots = bland_pivots_;
    const std::size_t total = n_ + m_;

    sol.x.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) sol.x[j] = x_[j] * col_scale_[j];
    sol.row_activity.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
        for (const auto& t : lp_.constraints()[i].terms) sol.row_activity[i] += t.coef * sol.x[t.var];
    double obj = lp_.objective_constant();
    for (std::size_t j = 0; j < n_; ++j) obj += lp_.variables()[j].objective * sol.x[j];
    sol.objective = obj;
    if (status != Status::Optimal) return sol;

    Vec y(static_cast<Eigen::Index>(m_));
    for (std::size_t p = 0; p < m_; ++p) y[static_cast<Eigen::Index>(p)] = cost_[head_[p]];
    btran(y);
    std::vector<double> d(total, 0.0);
    for (std::size_t j = 0; j < total; ++j)
        d[j] = state_[j] == VarState::Basic ? 0.0 : cost_[j] - dot_column(j, y);

    // KKT measures in scaled space.
    KktReport k;
    Vec ax = Vec::Zero(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < n_; ++j)
        for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) ax[it.row()] += it.value() * x_[j];
    for (std::size_t i = 0; i < m_; ++i)
        k.primal_infeasibility = std::max(k.primal_infeasibility, std::abs(ax[static_cast<Eigen::Index>(i)] - x_[n_ + i]));
    double pobj = 0.0, dobj = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
        k.primal_infeasibility = std::max(k.primal_infeasibility, infeasibility(j));
        pobj += cost_[j] * x_[j];
        const double dj = d[j];
        if (dj > 0) {
            if (!std::isfinite(lo_[j])) k.dual_infeasibility = std::max(k.dual_infeasibility, dj);
            else {
                k.complementarity = std::max(k.complementarity, dj * std::abs(x_[j] - lo_[j]));
                dobj += dj * lo_[j];
            }
        } else if (dj < 0) {
            if (!std::isfinite(up_[j])) k.dual_infeasibility = std::max(k.dual_infeasibility, -dj);
            else {
                k.complementarity = std::max(k.complementarity, -dj * std::abs(up_[j] - x_[j]));
                dobj += dj * up_[j];
            }
        }
        // Wrong-signed reduced costs at a bound.
        if (state_[j] == VarState::AtLower && up_[j] > lo_[j]) k.dual_infeasibility = std::max(k.dual_infeasibility, -dj);
        if (state_[j] == VarState::AtUpper && up_[j] > lo_[j]) k.dual_infeasibility = std::max(k.dual_infeasibility, dj);
    }
    k.dual_infeasibility = std::max(k.dual_infeasibility, 0.0);
    k.duality_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    sol.kkt = k;

    const double back = sense_sign_ / cost_scale_;
    sol.duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = y[static_cast<Eigen::Index>(i)] * row_scale_[i] * back;
    sol.reduced_costs.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) sol.reduced_costs[j] = d[j] * back / col_scale_[j];

    // Dual objective from the unscaled multipliers and active bounds.
    double dual = lp_.objective_constant();
    for (std::size_t i = 0; i < m_; ++i) {
        const double yi = sol.duals[i];
        if (yi == 0.0) continue;
        const auto& c = lp_.constraints()[i];
        const double lo = c.lower_bound(), hi = c.upper_bound();
        // Logical reduced cost equals y in scaled space; its sign picks the bound.
        const double bound = (sense_sign_ * yi > 0) ? lo : hi;
        dual += yi * (std::isfinite(bound) ? bound : (std::isfinite(lo) ? lo : hi));
    }
    for (std::size_t j = 0; j < n_; ++j) {
        const double rj = sol.reduced_costs[j];
        if (rj == 0.0) continue;
        const auto& v = lp_.variables()[j];
        const double bound = (sense_sign_ * rj > 0) ? v.lower : v.upper;
        dual += rj * (std::isfinite(bound) ? bound : 0.0);
    }
    sol.dual_objective = dual;
    return sol;
}

std::string sanitize(const std::string& name, const std::string& fallback) {
    if (name.empty()) return fallback;
    std::string out;
    out.reserve(name.size() + 2);
    for (char ch : name) {
        const bool ok = std::isalnum(static_cast<unsigned char>(ch)) ||
                        std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(ch) != std::string_view::npos;
        out.push_back(ok ? ch : '_');
    }
    const char c0 = out.front();
    if (std::isdigit(static_cast<unsigned char>(c0)) || c0 == '.' || c0 == 'e' || c0 == 'E') out = "_" + out;
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    if (v == kInf) return "+inf";
    if (v == -kInf) return "-inf";
    os << v;
    return os.str();
}

}  // namespace

PrimalDualSolution solve_lp(const LinearProgram& lp, const SolverOptions& options) {
    lp.check();
    Simplex s(lp, options);
    return s.run();
}

std::string to_lp_format(const LinearProgram& lp) {
    lp.check();
    std::vector<std::string> vn(lp.num_variables());
    for (std::size_t j = 0; j < vn.size(); ++j) vn[j] = sanitize(lp.variables()[j].name, "x" + std::to_string(j));

    auto write_terms = [&](std::ostringstream& os, const std::vector<std::pair<std::size_t, double>>& terms) {
        bool first = true;
        std::size_t count = 0;
        for (const auto& [j, c] : terms) {
            if (c == 0.0) continue;
            os << (c < 0 ? " - " : (first ? " " : " + ")) << fmt(std::abs(c)) << ' ' << vn[j];
            first = false;
            if (++count % 8 == 0) os << "\n ";
        }
        if (first) os << " 0 " << (vn.empty() ? "x0" : vn[0]);
    };

    std::ostringstream os;
    os << (lp.sense() == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj:";
    std::vector<std::pair<std::size_t, double>> obj;
    for (std::size_t j = 0; j < lp.num_variables(); ++j) obj.emplace_back(j, lp.variables()[j].objective);
    write_terms(os, obj);
    if (lp.objective_constant() != 0.0)
        os << (lp.objective_constant() < 0 ? " - " : " + ") << fmt(std::abs(lp.objective_constant()));
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
        const auto& c = lp.constraints()[i];
        std::vector<std::pair<std::size_t, double>> t;
        for (const auto& term : c.terms) t.emplace_back(term.var, term.coef);
        const std::string name = sanitize(c.name, "c" + std::to_string(i));
        auto row = [&](const std::string& nm, const char* rel, double rhs) {
            os << ' ' << nm << ':';
            write_terms(os, t);
            os << ' ' << rel << ' ' << fmt(rhs) << '\n';
        };
        switch (c.relation) {
            case Relation::LessEqual: row(name, "<=", c.rhs); break;
            case Relation::GreaterEqual: row(name, ">=", c.rhs); break;
            case Relation::Equal: row(name, "=", c.rhs); break;
            case Relation::Range:
                if (std::isfinite(c.range_lower)) row(name + "_lo", ">=", c.range_lower);
                if (std::isfinite(c.rhs)) row(name + "_hi", "<=", c.rhs);
                break;
        }
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < lp.num_variables(); ++j) {
        const auto& v = lp.variables()[j];
        if (v.lower == -kInf && v.upper == kInf) os << ' ' << vn[j] << " free\n";
        else if (v.lower == v.upper) os << ' ' << vn[j] << " = " << fmt(v.lower) << '\n';
        else os << ' ' << fmt(v.lower) << " <= " << vn[j] << " <= " << fmt(v.upper) << '\n';
    }
    os << "End\n";
    return os.str();
}

}  // namespace lossy::lp
