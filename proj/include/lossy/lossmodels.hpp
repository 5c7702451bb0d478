#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lossy/network.hpp"
#include "lossy/quadratic_loss.hpp"

namespace lossy {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LossKind { Constant, Linear, Piecewise };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

struct LossSegment {
    double alpha = 0.0;   // dimensionless
    double beta = 0.0;    // p.u.
    double f_star = 0.0;  // p.u., upper breakpoint in |f|
};

/// Convex, even, piecewise-linear loss approximation for one line.
struct LossModel {
    std::string line_id;
    LossKind kind = LossKind::Linear;
    std::vector<LossSegment> segments;
    bool repaired = false;  // set when convexity repair replaced the fit

    double capacity() const { return segments.empty() ? 0.0 : segments.back().f_star; }
    /// Segment selected by breakpoints: the first with |f| <= f*_k
    /// (ties resolve to the lower segment).
    std::size_t segment_at(double flow) const;
    double eval(double flow) const;
    /// Pointwise max over all pieces, i.e. what the LP epigraph represents.
    double epigraph_value(double flow) const;

    /// Build a model from slopes/intercepts only; breakpoints are the
    /// intersections of adjacent pieces and the last one is `capacity`.
    static LossModel from_coefficients(std::string line_id, LossKind kind,
                                       const std::vector<std::pair<double, double>>& alpha_beta,
                                       double capacity);
};

/// Throws FitError when a model breaks the kind/convexity/continuity rules.
void validate(const LossModel& model, double capacity_tolerance = 1e-9);

struct TwoPoint {
    double f1 = 0.0;
    double f2 = 0.0;
};
struct LeastSquares {
    double lo = 0.0;
    double hi = 0.0;
};
struct Tangent {
    double f0 = 0.0;
};
using LinearFit = std::variant<TwoPoint, LeastSquares, Tangent>;

enum class SegmentFit { Chord, LeastSquares, Tangent };

LossModel fit_constant(const QuadraticLoss& q, double anchor, double capacity, std::string line_id = {});
LossModel fit_linear(const QuadraticLoss& q, const LinearFit& method, double capacity,
                     std::string line_id = {});
LossModel fit_piecewise(const QuadraticLoss& q, double capacity, std::size_t n_segments, SegmentFit method,
                        std::string line_id = {});
/// Segments of `segment_length` from zero; the last one ends at capacity.
LossModel fit_piecewise_by_length(const QuadraticLoss& q, double capacity, double segment_length,
                                  SegmentFit method, std::string line_id = {});
/// Per-segment fit on explicit nominal breakpoints 0 < x_1 < ... < x_K = capacity.
LossModel fit_piecewise_on(const QuadraticLoss& q, const std::vector<double>& breakpoints, SegmentFit method,
                           std::string line_id = {});

/// Least-squares line through points (x_i, y_i); returns {alpha, beta}.
std::pair<double, double> least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

/// One inequality p >= sign * alpha * f + beta with its dual label.
struct EpigraphRow {
    std::size_t segment = 0;
    int sign = +1;  // +1 -> sigma+, -1 -> sigma-
    double alpha = 0.0;
    double beta = 0.0;
    std::string dual_label;
};
std::vector<EpigraphRow> epigraph_constraints(const LossModel& model);

struct LossDistribution {
    Eigen::MatrixXd d_ac;  // bus x AC line
    Eigen::MatrixXd d_dc;  // bus x HVDC link
};
LossDistribution distribution_matrices(const Network& net);
/// Generic half/half split for any node set given branch end points.
Eigen::MatrixXd distribution_matrix(std::size_t nodes,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& ends);

using LossTable = std::map<std::string, LossModel>;

std::string loss_table_to_csv(const LossTable& table);
LossTable loss_table_from_csv(const std::string& text);

}  // namespace lossy
