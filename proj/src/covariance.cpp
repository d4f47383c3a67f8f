#include "tvreg/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvreg/common.hpp"
#include "ldlt_guard.hpp"

namespace tvreg {

namespace {

inline int packed_index(int a, int c) { return c * (c + 1) / 2 + a; }

Eigen::MatrixXd unpack_sym(const Eigen::MatrixXd& rows, int g, int p) {
    Eigen::MatrixXd S(p, p);
    for (int c = 0; c < p; ++c)
        for (int a = 0; a <= c; ++a) S(a, c) = S(c, a) = rows(g, packed_index(a, c));
    return S;
}

// Intercept-only local linear weights at t over the default observation
// times; returns fitted row of the series and optionally the diagonal weight
// omega_t(t) used by the hat trace. Degenerate systems raise numeric_error.
void smooth_at(const Eigen::MatrixXd& series, const Kernel& kernel, double b, double t,
               Eigen::VectorXd& fitted, double* diag_weight) {
    const int n = static_cast<int>(series.rows());
    const int lo = std::max(1, static_cast<int>(std::ceil(n * (t - b) - 1e-12)));
    const int hi = std::min(n, static_cast<int>(std::floor(n * (t + b) + 1e-12)));
    double P0 = 0.0, P1 = 0.0, P2 = 0.0;
    for (int j = lo; j <= hi; ++j) {
        const double d = t - static_cast<double>(j) / n;
        const double k = kernel(-d / b);
        P0 += k;
        P1 += d * k;
        P2 += d * d * k;
    }
    const double den = P2 * P0 - P1 * P1;
    if (!(den > 0.0) || den <= 1e-13 * P2 * P0)
        throw numeric_error("degenerate smoothing weight system");

    fitted.setZero(series.cols());
    for (int j = lo; j <= hi; ++j) {
        const double d = t - static_cast<double>(j) / n;
        const double k = kernel(-d / b);
        const double w = k * (P2 - d * P1) / den;
        if (w != 0.0) fitted += w * series.row(j - 1).transpose();
    }
    if (diag_weight) *diag_weight = kernel(0.0) * P2 / den;
}

} // namespace

Eigen::MatrixXd smooth_series(const Eigen::MatrixXd& series, const Kernel& kernel, double b,
                              const EvaluationGrid& grid) {
    grid.validate();
    if (series.rows() < 2) throw config_error("series too short to smooth");
    if (!(b > 0.0) || b >= 1.0) throw config_error("bandwidth must lie in (0, 1)");
    const int G = grid.size();
    Eigen::MatrixXd out(G, series.cols());
    Eigen::VectorXd fitted;
    for (int g = 0; g < G; ++g) {
        smooth_at(series, kernel, b, grid.points[g], fitted, nullptr);
        out.row(g) = fitted.transpose();
    }
    return out;
}

double smoothing_gcv(const Eigen::MatrixXd& series, const Kernel& kernel, double b) {
    const int n = static_cast<int>(series.rows());
    if (n < 2) throw config_error("series too short to smooth");
    if (!(b > 0.0) || b >= 1.0) throw config_error("bandwidth must lie in (0, 1)");
    double rss = 0.0, tr = 0.0;
    Eigen::VectorXd fitted;
    double dw = 0.0;
    try {
        for (int i = 1; i <= n; ++i) {
            smooth_at(series, kernel, b, static_cast<double>(i) / n, fitted, &dw);
            rss += (fitted.transpose() - series.row(i - 1)).squaredNorm();
            tr += dw;
        }
    } catch (const numeric_error&) {
        return std::numeric_limits<double>::infinity();
    }
    const double denom = 1.0 - tr / n;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return (rss / n) / (denom * denom);
}

std::vector<double> covariance_bandwidth_grid() {
    return {0.08, 0.11, 0.15, 0.20, 0.27, 0.36, 0.48};
}

double select_smoothing_bandwidth(const Eigen::MatrixXd& series, const Kernel& kernel,
                                  const std::vector<double>& grid) {
    const std::vector<double> bs = grid.empty() ? covariance_bandwidth_grid() : grid;
    double best_b = 0.0, best = std::numeric_limits<double>::infinity();
    for (double b : bs) {
        const double score = smoothing_gcv(series, kernel, b);
        if (score < best) {
            best = score;
            best_b = b;
        }
    }
    if (best_b == 0.0) throw numeric_error("smoothing bandwidth selection failed on every candidate");
    return best_b;
}

std::vector<Eigen::MatrixXd> estimate_M(const RegressionData& data, const Kernel& kernel,
                                        double varpi, const EvaluationGrid& grid) {
    data.validate();
    const int n = data.n(), p = data.p(), m = p * (p + 1) / 2;
    Eigen::MatrixXd series(n, m);
    for (int i = 0; i < n; ++i) {
        int idx = 0;
        for (int c = 0; c < p; ++c)
            for (int a = 0; a <= c; ++a) series(i, idx++) = data.X(i, a) * data.X(i, c);
    }
    const Eigen::MatrixXd smoothed = smooth_series(series, kernel, varpi, grid);
    std::vector<Eigen::MatrixXd> out(grid.size());
    for (int g = 0; g < grid.size(); ++g) out[g] = unpack_sym(smoothed, g, p);
    return out;
}

Eigen::MatrixXd local_long_run_rows(const Eigen::MatrixXd& L, int lag) {
    const int n = static_cast<int>(L.rows());
    const int p = static_cast<int>(L.cols());
    if (lag < 0) throw config_error("truncation lag must be nonnegative");
    if (2 * lag >= n) throw config_error("truncation lag too large for the sample");
    const int m = p * (p + 1) / 2;

    // Prefix sums of L rows for O(1) window sums.
    Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n + 1, p);
    for (int i = 1; i <= n; ++i) prefix.row(i) = prefix.row(i - 1) + L.row(i - 1);

    Eigen::MatrixXd rows(n, m);
    Eigen::VectorXd w(p);
    for (int i = 1; i <= n; ++i) {
        const auto Li = L.row(i - 1);
        if (i <= lag) {
            const int hi = std::min(n, i + lag);
            w = Li.transpose() + 2.0 * (prefix.row(hi) - prefix.row(i)).transpose();
        } else if (i > n - lag) {
            const int lo = std::max(1, i - lag);
            w = Li.transpose() + 2.0 * (prefix.row(i - 1) - prefix.row(lo - 1)).transpose();
        } else {
            w = (prefix.row(i + lag) - prefix.row(i - lag - 1)).transpose();
        }
        // Symmetrized outer product (L_i w' + w L_i') / 2, packed.
        int idx = 0;
        for (int c = 0; c < p; ++c)
            for (int a = 0; a <= c; ++a)
                rows(i - 1, idx++) = 0.5 * (Li[a] * w[c] + w[a] * Li[c]);
    }
    return rows;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw numeric_error("eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    const double floor = 1e-10 * std::max(top, 1e-300);
    for (int i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<Eigen::MatrixXd> estimate_Lambda(const Eigen::MatrixXd& L, const Kernel& kernel,
                                             double tau, int lag, const EvaluationGrid& grid) {
    const int p = static_cast<int>(L.cols());
    const Eigen::MatrixXd rows = local_long_run_rows(L, lag);
    const Eigen::MatrixXd smoothed = smooth_series(rows, kernel, tau, grid);
    std::vector<Eigen::MatrixXd> out(grid.size());
    for (int g = 0; g < grid.size(); ++g)
        out[g] = project_psd(unpack_sym(smoothed, g, p));
    return out;
}

int select_truncation_lag(const Eigen::MatrixXd& L, int cap) {
    const int n = static_cast<int>(L.rows());
    if (n < 8) return 0;
    if (cap < 0) cap = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.25)));
    if (cap > n / 4) throw config_error("truncation cap exceeds n/4");
    for (int k = cap; k >= 1; --k) {
        const int len = n - k;
        double stat = 0.0;
        Eigen::VectorXd u(len);
        for (int i = 0; i < len; ++i) {
            u[i] = L.row(i).dot(L.row(i + k));
            stat += u[i];
        }
        stat /= std::sqrt(static_cast<double>(n));

        const int batch = std::max(1, static_cast<int>(std::floor(std::cbrt(static_cast<double>(len)))));
        const int nb = len / batch;
        if (nb < 2) continue;
        Eigen::VectorXd means(nb);
        for (int j = 0; j < nb; ++j) means[j] = u.segment(j * batch, batch).mean();
        const double mbar = means.mean();
        const double s2 = (means.array() - mbar).square().sum() / (nb - 1);
        const double sigma = len * std::sqrt(s2 / nb) / std::sqrt(static_cast<double>(n));
        if (std::abs(stat) > 1.96 * sigma) return k;
    }
    return 0;
}

std::vector<Eigen::MatrixXd> sandwich_Xi(const std::vector<Eigen::MatrixXd>& M,
                                         const std::vector<Eigen::MatrixXd>& Lambda) {
    if (M.size() != Lambda.size()) throw config_error("field sizes do not match");
    std::vector<Eigen::MatrixXd> out(M.size());
    for (std::size_t g = 0; g < M.size(); ++g) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M[g]);
        if (ldlt_singular(ldlt))
            throw numeric_error("design moment matrix singular in sandwich");
        const Eigen::MatrixXd t1 = ldlt.solve(Lambda[g]);
        Eigen::MatrixXd xi = ldlt.solve(t1.transpose());
        out[g] = 0.5 * (xi + xi.transpose());
    }
    return out;
}

CovarianceField estimate_covariance_field(const RegressionData& data, const LocalLinearFit& fit,
                                          const Kernel& kernel, const CovariancePolicy& policy) {
    data.validate();
    const int n = data.n(), p = data.p();
    if (fit.residuals.size() != n) throw config_error("fit does not match data");

    Eigen::MatrixXd L(n, p);
    for (int i = 0; i < n; ++i) L.row(i) = data.X.row(i) * fit.residuals[i];

    CovarianceField field;
    field.grid = fit.grid;
    field.truncation_lag =
        policy.truncation_lag >= 0 ? policy.truncation_lag : select_truncation_lag(L);
    if (2 * field.truncation_lag >= n) throw config_error("truncation lag too large for the sample");

    const double floor_b = std::pow(static_cast<double>(n), -0.2);
    if (policy.varpi > 0.0) {
        field.varpi = policy.varpi;
    } else {
        const int m = p * (p + 1) / 2;
        Eigen::MatrixXd xx(n, m);
        for (int i = 0; i < n; ++i) {
            int idx = 0;
            for (int c = 0; c < p; ++c)
                for (int a = 0; a <= c; ++a) xx(i, idx++) = data.X(i, a) * data.X(i, c);
        }
        field.varpi = std::max(select_smoothing_bandwidth(xx, kernel, policy.bandwidth_grid), floor_b);
    }

    const Eigen::MatrixXd rows = local_long_run_rows(L, field.truncation_lag);
    field.tau = policy.tau > 0.0 ? policy.tau
                                 : select_smoothing_bandwidth(rows, kernel, policy.bandwidth_grid);
    field.rho = field.truncation_lag / (n * field.tau);

    field.M_hat = estimate_M(data, kernel, field.varpi, field.grid);
    {
        const Eigen::MatrixXd smoothed = smooth_series(rows, kernel, field.tau, field.grid);
        field.Lambda_hat.resize(field.grid.size());
        for (int g = 0; g < field.grid.size(); ++g)
            field.Lambda_hat[g] = project_psd(unpack_sym(smoothed, g, p));
    }
    field.Xi_hat = sandwich_Xi(field.M_hat, field.Lambda_hat);
    return field;
}

} // namespace tvreg
