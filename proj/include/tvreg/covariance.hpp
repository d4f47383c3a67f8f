#ifndef TVREG_COVARIANCE_HPP
#define TVREG_COVARIANCE_HPP

#include <Eigen/Dense>
#include <vector>

#include "tvreg/data.hpp"
#include "tvreg/grid.hpp"
#include "tvreg/kernels.hpp"
#include "tvreg/locfit.hpp"

namespace tvreg {

// Bandwidths and truncation lag for the covariance plug-ins. Zero or negative
// entries request the data-driven choice.
struct CovariancePolicy {
    double varpi = 0.0;       // design moment smoothing bandwidth
    double tau = 0.0;         // long-run covariance smoothing bandwidth
    int truncation_lag = -1;  // lags kept in the local long-run rows
    std::vector<double> bandwidth_grid; // empty -> covariance_bandwidth_grid()
};

struct CovarianceField {
    EvaluationGrid grid;
    std::vector<Eigen::MatrixXd> M_hat;      // M(t_g), p x p
    std::vector<Eigen::MatrixXd> Lambda_hat; // Lambda(t_g), p x p
    std::vector<Eigen::MatrixXd> Xi_hat;     // M^{-1} Lambda M^{-1}
    double varpi = 0.0;
    double tau = 0.0;
    double rho = 0.0;         // truncation_lag = floor(n tau rho)
    int truncation_lag = 0;
};

// Fitted values of the intercept-only local linear smoother applied to each
// column of an n x m series, evaluated on the grid.
Eigen::MatrixXd smooth_series(const Eigen::MatrixXd& series, const Kernel& kernel,
                              double b, const EvaluationGrid& grid);

// Generalized cross validation score for the same smoother at the
// observation points; +inf when the smoother is degenerate at b.
double smoothing_gcv(const Eigen::MatrixXd& series, const Kernel& kernel, double b);

// Arg-min of smoothing_gcv over the bandwidth grid (smallest b on ties).
double select_smoothing_bandwidth(const Eigen::MatrixXd& series, const Kernel& kernel,
                                  const std::vector<double>& grid = {});

std::vector<double> covariance_bandwidth_grid();

// M_hat(t_g) = sum_i x_i x_i' omega_{i,varpi}(t_g).
std::vector<Eigen::MatrixXd> estimate_M(const RegressionData& data, const Kernel& kernel,
                                        double varpi, const EvaluationGrid& grid);

// Raw local long-run rows lambda_i from L_i = x_i e_i, symmetrized and packed
// as upper triangles (n x p(p+1)/2). lag is the number of neighbouring lags
// kept on each side; edge rows fold the out-of-range lags back in:
//   i <= lag:        L_i (L_i + 2 sum_{i<j<=i+lag} L_j)'
//   lag < i <= n-lag: L_i (sum_{|j-i|<=lag} L_j)'
//   i > n-lag:       L_i (L_i + 2 sum_{i-lag<=j<i} L_j)'
Eigen::MatrixXd local_long_run_rows(const Eigen::MatrixXd& L, int lag);

// Lambda_hat(t_g): local linear smoothing of the symmetrized lambda rows,
// projected onto the positive semidefinite cone at each grid point.
std::vector<Eigen::MatrixXd> estimate_Lambda(const Eigen::MatrixXd& L, const Kernel& kernel,
                                             double tau, int lag, const EvaluationGrid& grid);

// Largest lag k <= cap whose aggregate cross-product
// n^{-1/2} sum_i L_i' L_{i+k} clears 1.96 batch-means standard errors;
// zero when none does. cap must not exceed n/4; cap < 0 selects the
// default floor(n^{1/4}). Each lag is tested at roughly 5% size, so a
// generous cap inflates the chance of a spurious positive lag.
int select_truncation_lag(const Eigen::MatrixXd& L, int cap = -1);

// Eigenvalue floor at 1e-10 times the top eigenvalue.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& S);

std::vector<Eigen::MatrixXd> sandwich_Xi(const std::vector<Eigen::MatrixXd>& M,
                                         const std::vector<Eigen::MatrixXd>& Lambda);

// Full plug-in pipeline on the fit's grid: residual rows, truncation lag,
// GCV bandwidths (varpi floored at n^{-1/5}), M / Lambda / Xi fields.
CovarianceField estimate_covariance_field(const RegressionData& data, const LocalLinearFit& fit,
                                          const Kernel& kernel,
                                          const CovariancePolicy& policy = {});

} // namespace tvreg

#endif
