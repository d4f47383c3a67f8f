#ifndef TVREG_LOCFIT_HPP
#define TVREG_LOCFIT_HPP

#include <Eigen/Dense>
#include <vector>

#include "tvreg/data.hpp"
#include "tvreg/grid.hpp"
#include "tvreg/kernels.hpp"

namespace tvreg {

struct LocalLinearFit {
    EvaluationGrid grid;
    Eigen::MatrixXd beta;        // G x p, beta_tilde(t_g)
    Eigen::MatrixXd beta_deriv;  // G x p, beta_tilde'(t_g)
    double bandwidth = 0.0;
    Eigen::VectorXd residuals;   // e_i = y_i - x_i' beta_tilde(i/n)
    double hat_trace = 0.0;      // tr H(b)
    std::vector<char> singular_flags;
    int n_singular = 0;
};

// Kernel-weighted moment sums shared by every fit on the same (data, b, grid):
//   U_{n,l}(t) = (nb)^{-1} sum_i x_i x_i' {(i/n-t)/b}^l K{(i/n-t)/b}
//   V_{n,l}(t) = (nb)^{-1} sum_i x_i y_i  {(i/n-t)/b}^l K{(i/n-t)/b}
// for l = 0,1,2 (l = 0,1 for V). Column-subset fits solve the corresponding
// sub-block system, which is algebraically identical to refitting on the
// subset design, so variable selection reuses one moment pass.
class LocalMoments {
  public:
    LocalMoments(const RegressionData& data, const Kernel& kernel, double b,
                 const EvaluationGrid& grid);

    // Fit using the given design columns (empty subset means all columns).
    // Residuals, hat trace and fitted values are computed only when the grid
    // is the default i/n grid; otherwise the caller interpolates.
    LocalLinearFit fit(const RegressionData& data,
                       const std::vector<int>& subset = {}) const;

    // Residual sum of squares at observation times for a column subset.
    double subset_rss(const RegressionData& data, const std::vector<int>& subset) const;

    int n() const { return n_; }
    int p() const { return p_; }
    int grid_size() const { return G_; }
    double bandwidth() const { return b_; }
    const EvaluationGrid& grid() const { return grid_; }
    bool grid_is_default() const { return default_grid_; }

  private:
    friend class FixedDesignRefitter;

    void solve_point(int g, const std::vector<int>& subset, Eigen::VectorXd& out,
                     bool& flagged, double* hat_quad) const;

    int n_ = 0, p_ = 0, G_ = 0, m_ = 0;    // m_ = p(p+1)/2
    double b_ = 0.0;
    EvaluationGrid grid_;
    bool default_grid_ = false;
    Kernel kernel_;
    double kernel_at_zero_ = 0.0;
    std::vector<int> win_lo_, win_hi_;     // per grid point, 1-based obs range
    std::vector<double> U0_, U1_, U2_;     // G x p(p+1)/2 packed upper triangles
    std::vector<double> V0_, V1_;          // G x p
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Xr_;
};

LocalLinearFit local_linear_fit(const RegressionData& data, const Kernel& kernel,
                                double b, const EvaluationGrid& grid);

// Convenience overload on the default i/n grid.
LocalLinearFit local_linear_fit(const RegressionData& data, const Kernel& kernel,
                                double b);

// omega_{i,b}(t) = K{(i/n-t)/b} {P_{b,2}(t) - (t-i/n) P_{b,1}(t)}
//                  / {P_{b,2}(t) P_{b,0}(t) - P_{b,1}(t)^2},
// P_{b,l}(t) = sum_j (t-j/n)^l K{(j/n-t)/b}. Sums to 1 and reproduces
// linear functions of t.
Eigen::VectorXd local_linear_weights(const Kernel& kernel, double b, double t, int n);

// beta_tilde interpolated to arbitrary t (linear between unflagged grid
// points; exact at grid points).
Eigen::VectorXd beta_at(const LocalLinearFit& fit, double t);

// a_hat = int_0^1 A beta_tilde(t) dt by trapezoid, skipping flagged points
// with renormalized weights. Errors when more than 20% of the grid is flagged.
Eigen::VectorXd integrate_coefficients(const LocalLinearFit& fit, const Eigen::MatrixXd& A);

struct Theorem1Ci {
    Eigen::VectorXd point;     // a_hat
    Eigen::VectorXd lower, upper;
    Eigen::VectorXd bias_diagnostic; // (b^2 kappa2 / 2) int A beta'' dt, diagnostic only
    double level = 0.0;
};

struct CovarianceField; // covariance.hpp

// a_hat +- z_{1-alpha/2} sqrt(diag(int A Xi_hat A' dt) / n). The first-order
// bias xi_n vanishes under the null; it is reported from a numerically
// differentiated beta_tilde'' purely as a diagnostic.
Theorem1Ci theorem1_ci(const LocalLinearFit& fit, const Eigen::MatrixXd& A,
                       const CovarianceField& cov, double level,
                       const Kernel& kernel);

// Precomputes the banded hat operator rows h_i so that repeated fits of new
// responses on the same design cost one banded matvec each, for bootstrap
// loops where only y changes. Fitted values live on the default i/n grid.
class FixedDesignRefitter {
  public:
    FixedDesignRefitter(const RegressionData& data, const Kernel& kernel, double b);

    // Fitted values x_i' beta_tilde(i/n) for a new response on the same X.
    Eigen::VectorXd fitted(const Eigen::VectorXd& y) const;

    int n_flagged() const { return n_flagged_; }

  private:
    int n_ = 0, p_ = 0, n_flagged_ = 0;
    double b_ = 0.0;
    std::vector<int> win_lo_, win_hi_;   // 1-based obs range per row
    std::vector<std::size_t> offset_;    // start of row i in h_
    std::vector<double> h_;              // concatenated hat rows
    std::vector<char> flags_;
};

} // namespace tvreg

#endif
