#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lossy::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, Equal, GreaterEqual, Range };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double objective = 0.0;
};

struct Term {
    std::size_t var = 0;
    double coef = 0.0;
};

/// For `Range`, the row reads  range_lower <= a.x <= rhs.
struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
    double range_lower = -kInf;

    double lower_bound() const;
    double upper_bound() const;
};

class LinearProgram {
public:
    explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

    std::size_t add_variable(std::string name, double lower, double upper, double objective = 0.0);
    std::size_t add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);
    std::size_t add_range(std::string name, std::vector<Term> terms, double lower, double upper);

    void set_objective(std::size_t var, double coef) { variables_.at(var).objective = coef; }
    void set_bounds(std::size_t var, double lower, double upper);
    double objective_constant() const { return objective_constant_; }
    void set_objective_constant(double c) { objective_constant_ = c; }

    Sense sense() const { return sense_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    std::size_t num_variables() const { return variables_.size(); }
    std::size_t num_constraints() const { return constraints_.size(); }

    /// Throws std::invalid_argument on non-finite coefficients, crossed
    /// bounds or out-of-range variable references.
    void check() const;

private:
    Sense sense_;
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    double objective_constant_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded };
const char* to_string(Status status);

/// Optimality measures, evaluated on the internally scaled problem.
struct KktReport {
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double complementarity = 0.0;
    double duality_gap = 0.0;  // relative: |p - d| / (1 + |p|)

    double worst() const;
};

/// Sign convention: `duals[i]` is d(objective)/d(rhs_i) in the program's own
/// sense, and `reduced_costs[j]` is d(objective)/d(x_j) along the active bound.
/// For a minimisation, binding <= rows carry duals <= 0 and binding >= rows
/// duals >= 0; a maximisation flips both signs.
struct PrimalDualSolution {
    Status status = Status::Infeasible;
    std::vector<double> x;
    std::vector<double> duals;
    std::vector<double> reduced_costs;
    std::vector<double> row_activity;
    double objective = 0.0;
    double dual_objective = 0.0;
    KktReport kkt;
    std::size_t iterations = 0;
    std::size_t bland_pivots = 0;

    bool optimal() const { return status == Status::Optimal; }
};

/// Raised when the simplex cannot continue (singular basis, iteration cap).
/// `log` holds the most recent iteration trace.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::string log)
        : std::runtime_error(what), log_(std::move(log)) {}
    const std::string& log() const { return log_; }

private:
    std::string log_;
};

struct SolverOptions {
    double primal_tolerance = 1e-9;
    double dual_tolerance = 1e-9;
    std::size_t refactor_interval = 100;
    std::size_t degenerate_limit = 1000;  // consecutive degenerate pivots before Bland's rule
    std::size_t max_iterations = 0;       // 0 -> 50 * (rows + cols) + 1000
    bool scale = true;
};

PrimalDualSolution solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

/// CPLEX-LP text for cross-checking with external solvers. Ranged rows are
/// written as two inequalities.
std::string to_lp_format(const LinearProgram& lp);

}  // namespace lossy::lp
