#pragma once

#include <cmath>

namespace lossy {

// Loss as a function of flow magnitude: A*f^2 + B*|f| + C (all per-unit).
// An AC branch is the special case A = R, B = C = 0.
struct QuadraticLoss {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    static QuadraticLoss resistive(double r) { return {r, 0.0, 0.0}; }

    double operator()(double flow) const {
        const double m = std::abs(flow);
        return a * m * m + b * m + c;
    }
    // Derivative with respect to |f|.
    double slope(double magnitude) const { return 2.0 * a * magnitude + b; }

    bool operator==(const QuadraticLoss&) const = default;
};

}  // namespace lossy
