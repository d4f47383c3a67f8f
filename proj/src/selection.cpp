#include "tvreg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "tvreg/common.hpp"
#include "tvreg/covariance.hpp"

namespace tvreg {

double vic_penalty(int n) {
    if (n < 1) throw config_error("sample size must be positive");
    return std::pow(static_cast<double>(n), -0.4);
}

double vic_value(double rss, int subset_size, double chi_n) {
    if (subset_size < 1) throw config_error("subset must be nonempty");
    if (!(rss > 0.0)) throw numeric_error("zero residual sum of squares in selection");
    return std::log(rss) + chi_n * subset_size;
}

namespace {

// Subsets of {0..p-1} ordered by size then lexicographically, so a linear
// scan with strict improvement realizes the tie-breaking rule.
void enumerate_subsets(int p, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> D;
    for (int size = 1; size <= p; ++size) {
        D.assign(size, 0);
        for (int j = 0; j < size; ++j) D[j] = j;
        while (true) {
            visit(D);
            int j = size - 1;
            while (j >= 0 && D[j] == p - size + j) --j;
            if (j < 0) break;
            ++D[j];
            for (int k = j + 1; k < size; ++k) D[k] = D[k - 1] + 1;
        }
    }
}

} // namespace

SelectionReport select_subset(const RegressionData& data, const Kernel& kernel, double b,
                              double chi_n) {
    data.validate();
    const int p = data.p();
    const int n = data.n();

    SelectionReport report;
    report.chi_n = chi_n > 0.0 ? chi_n : vic_penalty(n);

    const LocalMoments moments(data, kernel, b, EvaluationGrid::default_for(n));
    const auto evaluate = [&](const std::vector<int>& D) {
        const double rss = moments.subset_rss(data, D);
        const double crit = vic_value(rss, static_cast<int>(D.size()), report.chi_n);
        report.candidates.push_back(D);
        report.rss.push_back(rss);
        report.vic.push_back(crit);
        return crit;
    };

    double best = std::numeric_limits<double>::infinity();
    if (p <= 20) {
        enumerate_subsets(p, [&](const std::vector<int>& D) {
            const double crit = evaluate(D);
            if (crit < best) {
                best = crit;
                report.chosen = D;
            }
        });
    } else {
        std::vector<int> current;
        std::vector<char> used(p, 0);
        while (static_cast<int>(current.size()) < p) {
            double round_best = std::numeric_limits<double>::infinity();
            int round_col = -1;
            for (int j = 0; j < p; ++j) {
                if (used[j]) continue;
                std::vector<int> trial = current;
                trial.push_back(j);
                std::sort(trial.begin(), trial.end());
                const double crit = evaluate(trial);
                if (crit < round_best) {
                    round_best = crit;
                    round_col = j;
                }
            }
            if (round_best < best) {
                best = round_best;
                used[round_col] = 1;
                current.push_back(round_col);
                std::sort(current.begin(), current.end());
                report.chosen = current;
            } else {
                break;
            }
        }
        if (report.chosen.empty()) throw numeric_error("forward selection found no subset");
    }
    return report;
}

Eigen::MatrixXd BandedCovariance::to_dense() const {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - band); j <= std::min(n - 1, i + band); ++j)
            G(i, j) = gamma[std::abs(i - j)];
        G(i, i) += diag_shift;
    }
    return G;
}

namespace {

// Cholesky feasibility of the shifted banded Toeplitz matrix with every pivot
// at or above the floor.
bool banded_cholesky_ok(const Eigen::VectorXd& gamma, int band, int n, double shift,
                        double floor, Eigen::MatrixXd* L_out) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(band + 1, n);
    for (int j = 0; j < n; ++j) {
        // Pivot: A(j,j) minus squared entries of row j already computed.
        double diag = gamma[0] + shift;
        for (int k = std::max(0, j - band); k < j; ++k) diag -= L(j - k, k) * L(j - k, k);
        if (!(diag >= floor) || !(diag > 0.0)) return false;
        const double pivot = std::sqrt(diag);
        L(0, j) = pivot;
        for (int i = j + 1; i <= std::min(n - 1, j + band); ++i) {
            double v = gamma[i - j];
            for (int k = std::max(0, i - band); k < j; ++k) v -= L(i - k, k) * L(j - k, k);
            L(i - j, j) = v / pivot;
        }
    }
    if (L_out) *L_out = std::move(L);
    return true;
}

} // namespace

BandedCovariance banded_gamma(const Eigen::VectorXd& residuals, int band) {
    const int n = static_cast<int>(residuals.size());
    if (n < 4) throw config_error("residual series too short");
    if (!residuals.allFinite()) throw config_error("residuals have non-finite entries");

    BandedCovariance cov;
    cov.n = n;
    if (band >= 0) {
        cov.band = std::min(band, n - 1);
    } else {
        Eigen::MatrixXd L(n, 1);
        L.col(0) = residuals;
        cov.band = select_truncation_lag(L);
    }

    cov.gamma.resize(cov.band + 1);
    const double rbar = residuals.mean();
    for (int k = 0; k <= cov.band; ++k) {
        double acc = 0.0;
        for (int i = 0; i + k < n; ++i)
            acc += (residuals[i] - rbar) * (residuals[i + k] - rbar);
        cov.gamma[k] = acc / n;
    }
    if (!(cov.gamma[0] > 0.0)) throw numeric_error("zero variance residual series");

    // Diagonal shift: smallest nonnegative delta whose banded Cholesky keeps
    // all pivots above a Gershgorin-scaled floor.
    double offsum = 0.0;
    for (int k = 1; k <= cov.band; ++k) offsum += std::abs(cov.gamma[k]);
    const double floor = 1e-10 * (cov.gamma[0] + 2.0 * offsum);
    if (banded_cholesky_ok(cov.gamma, cov.band, n, 0.0, floor, nullptr)) {
        cov.diag_shift = 0.0;
        return cov;
    }
    double lo = 0.0, hi = 2.0 * offsum + floor;
    if (!banded_cholesky_ok(cov.gamma, cov.band, n, hi, floor, nullptr))
        throw numeric_error("banded covariance repair failed");
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (banded_cholesky_ok(cov.gamma, cov.band, n, mid, floor, nullptr))
            hi = mid;
        else
            lo = mid;
    }
    cov.diag_shift = hi;
    return cov;
}

BandedCholesky::BandedCholesky(const BandedCovariance& cov) : n_(cov.n), band_(cov.band) {
    if (!banded_cholesky_ok(cov.gamma, cov.band, cov.n, cov.diag_shift, 0.0, &L_))
        throw numeric_error("banded covariance not positive definite");
}

Eigen::VectorXd BandedCholesky::solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != n_) throw config_error("right-hand side length does not match");
    Eigen::VectorXd x = rhs;
    // Forward substitution L z = rhs.
    for (int j = 0; j < n_; ++j) {
        x[j] /= L_(0, j);
        const int hi = std::min(n_ - 1, j + band_);
        for (int i = j + 1; i <= hi; ++i) x[i] -= L_(i - j, j) * x[j];
    }
    // Back substitution L' y = z.
    for (int j = n_ - 1; j >= 0; --j) {
        const int hi = std::min(n_ - 1, j + band_);
        for (int i = j + 1; i <= hi; ++i) x[j] -= L_(i - j, j) * x[i];
        x[j] /= L_(0, j);
    }
    return x;
}

double gcv(const RegressionData& data, const Kernel& kernel, double b,
           const BandedCovariance& gamma) {
    if (gamma.n != data.n()) throw config_error("covariance size does not match data");
    const LocalLinearFit fit = local_linear_fit(data, kernel, b);
    const double denom = 1.0 - fit.hat_trace / data.n();
    if (!(denom > 0.0)) throw numeric_error("smoother saturates the sample in cross validation");
    const BandedCholesky chol(gamma);
    const double quad = fit.residuals.dot(chol.solve(fit.residuals));
    return quad / data.n() / (denom * denom);
}

std::vector<double> default_b_grid() {
    std::vector<double> grid;
    for (int i = 5; i <= 95; ++i) grid.push_back(i / 100.0);
    return grid;
}

double select_gcv_bandwidth(const RegressionData& data, const Kernel& kernel,
                            const std::vector<double>& b_grid, const BandedCovariance& gamma) {
    if (b_grid.empty()) throw config_error("bandwidth grid is empty");
    double best_b = 0.0, best = std::numeric_limits<double>::infinity();
    for (double b : b_grid) {
        double score;
        try {
            score = gcv(data, kernel, b, gamma);
        } catch (const numeric_error&) {
            continue;
        }
        if (score < best) {
            best = score;
            best_b = b;
        }
    }
    if (best_b == 0.0) throw numeric_error("cross validation failed on every bandwidth");
    return best_b;
}

TwoStageResult two_stage_bandwidth(const RegressionData& data, const Kernel& kernel, double chi_n,
                                   const std::vector<double>& b_grid) {
    data.validate();
    const std::vector<double> grid = b_grid.empty() ? default_b_grid() : b_grid;

    const double b0 = std::pow(static_cast<double>(data.n()), -0.2);
    const LocalLinearFit pilot = local_linear_fit(data, kernel, b0);

    TwoStageResult out;
    out.gamma = banded_gamma(pilot.residuals);
    out.b_pilot = select_gcv_bandwidth(data, kernel, grid, out.gamma);
    out.selection = select_subset(data, kernel, out.b_pilot, chi_n);
    out.selection.bandwidth_pilot = out.b_pilot;

    RegressionData sub;
    sub.y = data.y;
    const int d = static_cast<int>(out.selection.chosen.size());
    sub.X.resize(data.n(), d);
    for (int j = 0; j < d; ++j) sub.X.col(j) = data.X.col(out.selection.chosen[j]);
    if (!data.column_names.empty()) {
        sub.column_names.reserve(d);
        for (int j = 0; j < d; ++j) sub.column_names.push_back(data.column_names[out.selection.chosen[j]]);
    }
    out.b_final = select_gcv_bandwidth(sub, kernel, grid, out.gamma);
    out.selection.bandwidth_final = out.b_final;
    return out;
}

double refine_bandwidth(const RegressionData& data, const Kernel& kernel, double b_lo,
                        double b_hi, const BandedCovariance& gamma, double tol) {
    if (!(b_lo > 0.0) || !(b_hi < 1.0) || !(b_lo < b_hi))
        throw config_error("invalid refinement bracket");
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = b_lo, b = b_hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = gcv(data, kernel, x1, gamma), f2 = gcv(data, kernel, x2, gamma);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = gcv(data, kernel, x1, gamma);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = gcv(data, kernel, x2, gamma);
        }
    }
    return 0.5 * (a + b);
}

} // namespace tvreg
