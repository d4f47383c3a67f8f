#include "tvreg/grid.hpp"

#include <cmath>

#include "tvreg/common.hpp"

namespace tvreg {

EvaluationGrid EvaluationGrid::default_for(int n) {
    if (n < 2) throw config_error("EvaluationGrid: n must be >= 2");
    EvaluationGrid g;
    g.points.resize(n);
    for (int i = 1; i <= n; ++i) g.points[i - 1] = static_cast<double>(i) / n;
    return g;
}

EvaluationGrid EvaluationGrid::uniform(int G) {
    if (G < 2) throw config_error("EvaluationGrid: G must be >= 2");
    EvaluationGrid g;
    g.points.resize(G);
    for (int i = 0; i < G; ++i) g.points[i] = static_cast<double>(i) / (G - 1);
    return g;
}

void EvaluationGrid::validate() const {
    if (size() < 2) throw config_error("EvaluationGrid: need at least 2 points");
    for (int i = 0; i < size(); ++i) {
        const double t = points[i];
        if (!std::isfinite(t) || t < 0.0 || t > 1.0)
            throw config_error("EvaluationGrid: points must lie in [0,1]");
        if (i > 0 && t <= points[i - 1])
            throw config_error("EvaluationGrid: points must be strictly increasing");
    }
}

double trapezoid(const EvaluationGrid& grid, const Eigen::VectorXd& values,
                 const std::vector<char>* flags, double max_flagged_fraction) {
    const int G = grid.size();
    if (values.size() != G) throw config_error("trapezoid: size mismatch");

    if (flags != nullptr) {
        int bad = 0;
        for (char f : *flags)
            if (f) ++bad;
        if (bad > max_flagged_fraction * G)
            throw numeric_error("trapezoid: too many singular grid points");
    }

    double integral = 0.0;
    double prev_t = 0.0, prev_v = 0.0;
    double first_t = 0.0, last_t = 0.0;
    int used = 0;
    for (int g = 0; g < G; ++g) {
        if (flags != nullptr && (*flags)[g]) continue;
        const double t = grid.points[g];
        const double v = values[g];
        if (used > 0) integral += 0.5 * (v + prev_v) * (t - prev_t);
        else first_t = t;
        prev_t = t;
        prev_v = v;
        last_t = t;
        ++used;
    }
    if (used < 2) throw numeric_error("trapezoid: fewer than 2 usable grid points");

    const double full_span = grid.points[G - 1] - grid.points[0];
    const double used_span = last_t - first_t;
    if (used_span <= 0.0) throw numeric_error("trapezoid: degenerate span");
    return integral * (full_span / used_span);
}

} // namespace tvreg
