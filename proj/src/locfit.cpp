#include "tvreg/locfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tvreg/common.hpp"
#include "ldlt_guard.hpp"
#include "tvreg/covariance.hpp"
#include "tvreg/stats.hpp"

namespace tvreg {

namespace {

// Packed upper-triangle index for (a, c) with a <= c.
inline int packed_index(int a, int c) { return c * (c + 1) / 2 + a; }

bool is_default_grid(const EvaluationGrid& grid, int n) {
    if (grid.size() != n) return false;
    for (int g = 0; g < n; ++g)
        if (std::abs(grid.points[g] - static_cast<double>(g + 1) / n) > 1e-12) return false;
    return true;
}

std::vector<int> resolve_subset(const std::vector<int>& subset, int p) {
    std::vector<int> D;
    if (subset.empty()) {
        D.resize(p);
        for (int j = 0; j < p; ++j) D[j] = j;
        return D;
    }
    D = subset;
    std::sort(D.begin(), D.end());
    for (std::size_t k = 0; k < D.size(); ++k) {
        if (D[k] < 0 || D[k] >= p) throw config_error("column subset index out of range");
        if (k > 0 && D[k] == D[k - 1]) throw config_error("column subset has duplicate indices");
    }
    return D;
}

// Observation window for bandwidth b around t: all 1-based i with |i/n - t| <= b.
inline void window_range(double t, double b, int n, int& lo, int& hi) {
    lo = std::max(1, static_cast<int>(std::ceil(n * (t - b) - 1e-12)));
    hi = std::min(n, static_cast<int>(std::floor(n * (t + b) + 1e-12)));
}

// Linear interpolation across flagged grid rows so downstream residuals stay
// finite; flags still mark the rows as unreliable for integration.
void fill_flagged_rows(Eigen::MatrixXd& values, const std::vector<char>& flags,
                       const Eigen::VectorXd& points) {
    const int G = static_cast<int>(flags.size());
    std::vector<int> good;
    good.reserve(G);
    for (int g = 0; g < G; ++g)
        if (!flags[g]) good.push_back(g);
    if (good.empty() || static_cast<int>(good.size()) == G) return;
    for (int g = 0; g < G; ++g) {
        if (!flags[g]) continue;
        auto it = std::lower_bound(good.begin(), good.end(), g);
        if (it == good.begin()) {
            values.row(g) = values.row(good.front());
        } else if (it == good.end()) {
            values.row(g) = values.row(good.back());
        } else {
            const int hi = *it, lo = *(it - 1);
            const double w = (points[g] - points[lo]) / (points[hi] - points[lo]);
            values.row(g) = (1.0 - w) * values.row(lo) + w * values.row(hi);
        }
    }
}

} // namespace

LocalMoments::LocalMoments(const RegressionData& data, const Kernel& kernel, double b,
                           const EvaluationGrid& grid)
    : kernel_(kernel) {
    data.validate();
    grid.validate();
    if (!(b > 0.0) || b >= 1.0) throw config_error("bandwidth must lie in (0, 1)");
    n_ = data.n();
    p_ = data.p();
    G_ = grid.size();
    m_ = p_ * (p_ + 1) / 2;
    b_ = b;
    grid_ = grid;
    default_grid_ = is_default_grid(grid, n_);
    kernel_at_zero_ = kernel(0.0);
    Xr_ = data.X;

    // Packed x_i x_i' rows so the moment pass is contiguous fma work.
    std::vector<double> px(static_cast<std::size_t>(n_) * m_);
    for (int i = 0; i < n_; ++i) {
        const double* xi = Xr_.data() + static_cast<std::size_t>(i) * p_;
        double* row = px.data() + static_cast<std::size_t>(i) * m_;
        int idx = 0;
        for (int c = 0; c < p_; ++c)
            for (int a = 0; a <= c; ++a) row[idx++] = xi[a] * xi[c];
    }

    win_lo_.resize(G_);
    win_hi_.resize(G_);
    U0_.assign(static_cast<std::size_t>(G_) * m_, 0.0);
    U1_.assign(static_cast<std::size_t>(G_) * m_, 0.0);
    U2_.assign(static_cast<std::size_t>(G_) * m_, 0.0);
    V0_.assign(static_cast<std::size_t>(G_) * p_, 0.0);
    V1_.assign(static_cast<std::size_t>(G_) * p_, 0.0);

    const double scale = 1.0 / (n_ * b_);
    for (int g = 0; g < G_; ++g) {
        const double t = grid_.points[g];
        int lo, hi;
        window_range(t, b_, n_, lo, hi);
        win_lo_[g] = lo;
        win_hi_[g] = hi;
        double* u0 = U0_.data() + static_cast<std::size_t>(g) * m_;
        double* u1 = U1_.data() + static_cast<std::size_t>(g) * m_;
        double* u2 = U2_.data() + static_cast<std::size_t>(g) * m_;
        double* v0 = V0_.data() + static_cast<std::size_t>(g) * p_;
        double* v1 = V1_.data() + static_cast<std::size_t>(g) * p_;
        for (int i = lo; i <= hi; ++i) {
            const double v = (static_cast<double>(i) / n_ - t) / b_;
            const double k = kernel_(v);
            if (k == 0.0) continue;
            const double kv = k * v;
            const double kv2 = kv * v;
            const double* row = px.data() + static_cast<std::size_t>(i - 1) * m_;
            for (int j = 0; j < m_; ++j) {
                u0[j] += k * row[j];
                u1[j] += kv * row[j];
                u2[j] += kv2 * row[j];
            }
            const double* xi = Xr_.data() + static_cast<std::size_t>(i - 1) * p_;
            const double ky = k * data.y[i - 1];
            const double kvy = kv * data.y[i - 1];
            for (int j = 0; j < p_; ++j) {
                v0[j] += ky * xi[j];
                v1[j] += kvy * xi[j];
            }
        }
        for (int j = 0; j < m_; ++j) {
            u0[j] *= scale;
            u1[j] *= scale;
            u2[j] *= scale;
        }
        for (int j = 0; j < p_; ++j) {
            v0[j] *= scale;
            v1[j] *= scale;
        }
    }
}

void LocalMoments::solve_point(int g, const std::vector<int>& subset, Eigen::VectorXd& out,
                               bool& flagged, double* hat_quad) const {
    const int d = static_cast<int>(subset.size());
    const double* u0 = U0_.data() + static_cast<std::size_t>(g) * m_;
    const double* u1 = U1_.data() + static_cast<std::size_t>(g) * m_;
    const double* u2 = U2_.data() + static_cast<std::size_t>(g) * m_;
    const double* v0 = V0_.data() + static_cast<std::size_t>(g) * p_;
    const double* v1 = V1_.data() + static_cast<std::size_t>(g) * p_;

    Eigen::MatrixXd M(2 * d, 2 * d);
    Eigen::VectorXd rhs(2 * d);
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r <= c; ++r) {
            const int idx = packed_index(subset[r], subset[c]);
            M(r, c) = M(c, r) = u0[idx];
            M(r, c + d) = M(c + d, r) = u1[idx];
            M(c, r + d) = M(r + d, c) = u1[idx];
            M(r + d, c + d) = M(c + d, r + d) = u2[idx];
        }
        rhs[c] = v0[subset[c]];
        rhs[c + d] = v1[subset[c]];
    }

    flagged = false;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt_singular(ldlt)) {
        flagged = true;
        out.setZero(2 * d);
        if (hat_quad) *hat_quad = 0.0;
        return;
    }
    out = ldlt.solve(rhs);
    if (!out.allFinite()) {
        flagged = true;
        out.setZero(2 * d);
        if (hat_quad) *hat_quad = 0.0;
        return;
    }
    if (hat_quad) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * d);
        const double* xi = Xr_.data() + static_cast<std::size_t>(g) * p_;
        for (int r = 0; r < d; ++r) z[r] = xi[subset[r]];
        *hat_quad = z.dot(ldlt.solve(z));
    }
}

LocalLinearFit LocalMoments::fit(const RegressionData& data, const std::vector<int>& subset) const {
    const std::vector<int> D = resolve_subset(subset, p_);
    const int d = static_cast<int>(D.size());

    LocalLinearFit result;
    result.grid = grid_;
    result.bandwidth = b_;
    result.beta.resize(G_, d);
    result.beta_deriv.resize(G_, d);
    result.singular_flags.assign(G_, 0);
    result.n_singular = 0;

    Eigen::VectorXd sol;
    double quad = 0.0, hat = 0.0;
    for (int g = 0; g < G_; ++g) {
        bool flagged = false;
        solve_point(g, D, sol, flagged, default_grid_ ? &quad : nullptr);
        if (flagged) {
            result.singular_flags[g] = 1;
            ++result.n_singular;
            result.beta.row(g).setZero();
            result.beta_deriv.row(g).setZero();
            continue;
        }
        for (int j = 0; j < d; ++j) {
            result.beta(g, j) = sol[j];
            result.beta_deriv(g, j) = sol[j + d] / b_;
        }
        if (default_grid_) hat += quad;
    }
    if (result.n_singular == G_)
        throw numeric_error("local linear system singular at every grid point");

    fill_flagged_rows(result.beta, result.singular_flags, grid_.points);
    fill_flagged_rows(result.beta_deriv, result.singular_flags, grid_.points);

    if (default_grid_) {
        result.hat_trace = hat * kernel_at_zero_ / (n_ * b_);
        result.residuals.resize(n_);
        for (int i = 0; i < n_; ++i) {
            const double* xi = Xr_.data() + static_cast<std::size_t>(i) * p_;
            double fit_i = 0.0;
            for (int j = 0; j < d; ++j) fit_i += xi[D[j]] * result.beta(i, j);
            result.residuals[i] = data.y[i] - fit_i;
        }
    } else {
        LocalMoments def(data, kernel_, b_, EvaluationGrid::default_for(n_));
        LocalLinearFit dfit = def.fit(data, subset);
        result.residuals = dfit.residuals;
        result.hat_trace = dfit.hat_trace;
    }
    return result;
}

double LocalMoments::subset_rss(const RegressionData& data, const std::vector<int>& subset) const {
    return fit(data, subset).residuals.squaredNorm();
}

LocalLinearFit local_linear_fit(const RegressionData& data, const Kernel& kernel, double b,
                                const EvaluationGrid& grid) {
    LocalMoments moments(data, kernel, b, grid);
    return moments.fit(data);
}

LocalLinearFit local_linear_fit(const RegressionData& data, const Kernel& kernel, double b) {
    return local_linear_fit(data, kernel, b, EvaluationGrid::default_for(data.n()));
}

Eigen::VectorXd local_linear_weights(const Kernel& kernel, double b, double t, int n) {
    if (n < 2) throw config_error("need at least two observations for local weights");
    if (!(b > 0.0) || b >= 1.0) throw config_error("bandwidth must lie in (0, 1)");
    if (t < 0.0 || t > 1.0) throw config_error("evaluation point must lie in [0, 1]");

    Eigen::VectorXd k(n), dist(n);
    double P0 = 0.0, P1 = 0.0, P2 = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double d = t - static_cast<double>(j) / n;
        const double kj = kernel(-d / b);
        k[j - 1] = kj;
        dist[j - 1] = d;
        P0 += kj;
        P1 += d * kj;
        P2 += d * d * kj;
    }
    const double den = P2 * P0 - P1 * P1;
    if (!(den > 0.0) || den <= 1e-13 * P2 * P0)
        throw numeric_error("degenerate local linear weight system");

    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = k[i] * (P2 - dist[i] * P1) / den;
    return w;
}

Eigen::VectorXd beta_at(const LocalLinearFit& fit, double t) {
    const int G = fit.grid.size();
    std::vector<int> good;
    good.reserve(G);
    for (int g = 0; g < G; ++g)
        if (!fit.singular_flags[g]) good.push_back(g);
    if (good.empty()) throw numeric_error("no usable grid points in fit");

    const Eigen::VectorXd& pts = fit.grid.points;
    if (t <= pts[good.front()]) return fit.beta.row(good.front()).transpose();
    if (t >= pts[good.back()]) return fit.beta.row(good.back()).transpose();
    int lo = 0, hi = static_cast<int>(good.size()) - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (pts[good[mid]] <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double tl = pts[good[lo]], th = pts[good[hi]];
    const double w = (t - tl) / (th - tl);
    return (1.0 - w) * fit.beta.row(good[lo]).transpose() + w * fit.beta.row(good[hi]).transpose();
}

Eigen::VectorXd integrate_coefficients(const LocalLinearFit& fit, const Eigen::MatrixXd& A) {
    if (A.cols() != fit.beta.cols())
        throw config_error("restriction matrix has wrong number of columns");
    const int s = static_cast<int>(A.rows());
    const int G = fit.grid.size();
    Eigen::VectorXd out(s), curve(G);
    for (int r = 0; r < s; ++r) {
        for (int g = 0; g < G; ++g) curve[g] = A.row(r).dot(fit.beta.row(g));
        out[r] = trapezoid(fit.grid, curve, &fit.singular_flags);
    }
    return out;
}

Theorem1Ci theorem1_ci(const LocalLinearFit& fit, const Eigen::MatrixXd& A,
                       const CovarianceField& cov, double level, const Kernel& kernel) {
    if (!(level > 0.0) || level >= 1.0) throw config_error("confidence level must lie in (0, 1)");
    if (A.cols() != fit.beta.cols())
        throw config_error("restriction matrix has wrong number of columns");
    const int G = fit.grid.size();
    if (static_cast<int>(cov.Xi_hat.size()) != G)
        throw config_error("covariance field grid does not match fit grid");
    for (int g = 0; g < G; ++g)
        if (std::abs(cov.grid.points[g] - fit.grid.points[g]) > 1e-12)
            throw config_error("covariance field grid does not match fit grid");

    const int s = static_cast<int>(A.rows());
    const int n = static_cast<int>(fit.residuals.size());

    Theorem1Ci ci;
    ci.level = level;
    ci.point = integrate_coefficients(fit, A);

    // S = int A Xi_hat(t) A' dt, entrywise trapezoid.
    Eigen::MatrixXd S(s, s);
    Eigen::VectorXd curve(G);
    for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) {
            for (int g = 0; g < G; ++g)
                curve[g] = (A.row(r) * cov.Xi_hat[g] * A.row(c).transpose()).value();
            S(r, c) = trapezoid(fit.grid, curve, &fit.singular_flags);
        }
    }

    const double z = normal_quantile(0.5 * (1.0 + level));
    ci.lower.resize(s);
    ci.upper.resize(s);
    for (int r = 0; r < s; ++r) {
        const double var = S(r, r);
        if (!(var >= 0.0)) throw numeric_error("negative variance in confidence interval");
        const double half = z * std::sqrt(var / n);
        ci.lower[r] = ci.point[r] - half;
        ci.upper[r] = ci.point[r] + half;
    }

    // First-order bias (b^2 kappa2 / 2) int A beta'' dt from a differenced
    // derivative curve; vanishes under a true null, reported as a diagnostic.
    const int p = static_cast<int>(fit.beta.cols());
    Eigen::MatrixXd bdd(G, p);
    const Eigen::VectorXd& pts = fit.grid.points;
    for (int g = 0; g < G; ++g) {
        const int lo = std::max(0, g - 1), hi = std::min(G - 1, g + 1);
        bdd.row(g) = (fit.beta_deriv.row(hi) - fit.beta_deriv.row(lo)) / (pts[hi] - pts[lo]);
    }
    const double kappa2 = simpson(-1.0, 1.0, 512, [&](double v) { return v * v * kernel(v); });
    ci.bias_diagnostic.resize(s);
    for (int r = 0; r < s; ++r) {
        for (int g = 0; g < G; ++g) curve[g] = A.row(r).dot(bdd.row(g));
        ci.bias_diagnostic[r] =
            0.5 * fit.bandwidth * fit.bandwidth * kappa2 * trapezoid(fit.grid, curve, &fit.singular_flags);
    }
    return ci;
}

FixedDesignRefitter::FixedDesignRefitter(const RegressionData& data, const Kernel& kernel, double b) {
    data.validate();
    if (!(b > 0.0) || b >= 1.0) throw config_error("bandwidth must lie in (0, 1)");
    n_ = data.n();
    p_ = data.p();
    b_ = b;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Xr = data.X;

    win_lo_.resize(n_);
    win_hi_.resize(n_);
    offset_.resize(n_ + 1, 0);
    flags_.assign(n_, 0);

    for (int g = 0; g < n_; ++g) {
        const double t = static_cast<double>(g + 1) / n_;
        int lo, hi;
        window_range(t, b_, n_, lo, hi);
        win_lo_[g] = lo;
        win_hi_[g] = hi;
        offset_[g + 1] = offset_[g] + static_cast<std::size_t>(hi - lo + 1);
    }
    h_.assign(offset_[n_], 0.0);

    const double scale = 1.0 / (n_ * b_);
    Eigen::MatrixXd M(2 * p_, 2 * p_);
    Eigen::VectorXd z(2 * p_);
    for (int g = 0; g < n_; ++g) {
        const double t = static_cast<double>(g + 1) / n_;
        const int lo = win_lo_[g], hi = win_hi_[g];
        M.setZero();
        for (int i = lo; i <= hi; ++i) {
            const double v = (static_cast<double>(i) / n_ - t) / b_;
            const double k = kernel(v);
            if (k == 0.0) continue;
            const auto xi = Xr.row(i - 1);
            for (int c = 0; c < p_; ++c) {
                for (int r = 0; r <= c; ++r) {
                    const double xx = xi[r] * xi[c];
                    M(r, c) += k * xx;
                    M(r, c + p_) += k * v * xx;
                    if (r != c) M(c, r + p_) += k * v * xx;
                    M(r + p_, c + p_) += k * v * v * xx;
                }
            }
        }
        M *= scale;
        const Eigen::MatrixXd Mfull = M.selfadjointView<Eigen::Upper>();

        Eigen::LDLT<Eigen::MatrixXd> ldlt(Mfull);
        if (ldlt_singular(ldlt)) {
            flags_[g] = 1;
            ++n_flagged_;
            continue;
        }
        z.setZero();
        for (int r = 0; r < p_; ++r) z[r] = Xr(g, r);
        const Eigen::VectorXd w = ldlt.solve(z);
        if (!w.allFinite()) {
            flags_[g] = 1;
            ++n_flagged_;
            continue;
        }
        double* row = h_.data() + offset_[g];
        for (int i = lo; i <= hi; ++i) {
            const double v = (static_cast<double>(i) / n_ - t) / b_;
            const double k = kernel(v);
            double acc = 0.0;
            const auto xi = Xr.row(i - 1);
            for (int r = 0; r < p_; ++r) acc += (w[r] + v * w[r + p_]) * xi[r];
            row[i - lo] = scale * k * acc;
        }
    }
    if (n_flagged_ == n_)
        throw numeric_error("local linear system singular at every grid point");
}

Eigen::VectorXd FixedDesignRefitter::fitted(const Eigen::VectorXd& y) const {
    if (y.size() != n_) throw config_error("response length does not match design");
    Eigen::VectorXd out(n_);
    for (int g = 0; g < n_; ++g) {
        const int lo = win_lo_[g], len = win_hi_[g] - win_lo_[g] + 1;
        const double* row = h_.data() + offset_[g];
        const double* yp = y.data() + (lo - 1);
        double acc = 0.0;
        for (int i = 0; i < len; ++i) acc += row[i] * yp[i];
        out[g] = acc;
    }
    if (n_flagged_ > 0) {
        Eigen::MatrixXd col = out;
        Eigen::VectorXd pts(n_);
        for (int g = 0; g < n_; ++g) pts[g] = static_cast<double>(g + 1) / n_;
        fill_flagged_rows(col, flags_, pts);
        out = col;
    }
    return out;
}

} // namespace tvreg
