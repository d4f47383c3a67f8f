#ifndef TVREG_GRID_HPP
#define TVREG_GRID_HPP

#include <Eigen/Dense>
#include <vector>

namespace tvreg {

// Discretization of t in [0,1] for coefficient curves and integrals.
struct EvaluationGrid {
    Eigen::VectorXd points; // strictly increasing, within [0,1]

    int size() const { return static_cast<int>(points.size()); }

    // Default grid: i/n, i = 1..n (matches the residual/RSS index set).
    static EvaluationGrid default_for(int n);
    // G equally spaced points spanning [0,1].
    static EvaluationGrid uniform(int G);

    void validate() const;
};

// Composite trapezoid of values over grid.points. Flagged points (flags
// nonzero) are skipped; the quadrature is then rescaled by the ratio of the
// full grid span to the span of the surviving points so the integral still
// represents the whole interval. Throws numeric_error when more than
// max_flagged_fraction of the grid is flagged or fewer than 2 points remain.
double trapezoid(const EvaluationGrid& grid, const Eigen::VectorXd& values,
                 const std::vector<char>* flags = nullptr,
                 double max_flagged_fraction = 0.2);

} // namespace tvreg

#endif
