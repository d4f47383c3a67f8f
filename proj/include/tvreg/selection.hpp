#ifndef TVREG_SELECTION_HPP
#define TVREG_SELECTION_HPP

#include <Eigen/Dense>
#include <vector>

#include "tvreg/data.hpp"
#include "tvreg/kernels.hpp"
#include "tvreg/locfit.hpp"

namespace tvreg {

// Penalty weight chi_n = n^{-2/5}: vanishes slowly enough to kill over-fit
// sets yet faster than the log RSS gap left by an under-fit set.
double vic_penalty(int n);

// VIC(D) = log RSS(D) + chi_n |D|; zero RSS is an error.
double vic_value(double rss, int subset_size, double chi_n);

struct SelectionReport {
    std::vector<std::vector<int>> candidates;
    std::vector<double> rss;
    std::vector<double> vic;
    double chi_n = 0.0;
    std::vector<int> chosen;
    double bandwidth_pilot = 0.0;  // filled by the two-stage wrapper
    double bandwidth_final = 0.0;
};

// Minimizes VIC over column subsets of the design at bandwidth b,
// exhaustively for p <= 20 and by forward inclusion beyond that. Ties prefer
// the smaller set, then the lexicographically first. chi_n <= 0 requests the
// default penalty.
SelectionReport select_subset(const RegressionData& data, const Kernel& kernel, double b,
                              double chi_n = 0.0);

// Symmetric banded Toeplitz covariance built from residual autocovariances,
// with a diagonal shift making it positive definite.
struct BandedCovariance {
    Eigen::VectorXd gamma;   // lags 0..band, before the shift
    int band = 0;
    int n = 0;
    double diag_shift = 0.0;
    Eigen::MatrixXd to_dense() const;
};

// band < 0 selects the truncation lag from the residual series itself.
BandedCovariance banded_gamma(const Eigen::VectorXd& residuals, int band = -1);

// Cholesky factorization of the shifted banded Toeplitz matrix; O(n band^2).
class BandedCholesky {
  public:
    explicit BandedCholesky(const BandedCovariance& cov);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  private:
    int n_ = 0, band_ = 0;
    Eigen::MatrixXd L_;  // (band+1) x n, L_(d, j) = L(j+d, j)
};

// GCV(b) = n^{-1} (Yhat - Y)' Gamma^{-1} (Yhat - Y) / (1 - tr H / n)^2.
// Errors when the smoother has as many effective parameters as observations.
double gcv(const RegressionData& data, const Kernel& kernel, double b,
           const BandedCovariance& gamma);

// 0.05, 0.06, ..., 0.95.
std::vector<double> default_b_grid();

// Arg-min of gcv over the grid, skipping degenerate candidates; smaller b on
// ties.
double select_gcv_bandwidth(const RegressionData& data, const Kernel& kernel,
                            const std::vector<double>& b_grid, const BandedCovariance& gamma);

struct TwoStageResult {
    double b_pilot = 0.0;            // stage-one GCV bandwidth on the full design
    SelectionReport selection;       // VIC run at b_pilot
    double b_final = 0.0;            // stage-two GCV bandwidth on the chosen subset
    BandedCovariance gamma;          // residual covariance used by both stages
};

// Pilot fit at n^{-1/5} supplies the residual covariance; GCV picks a full
// design bandwidth, VIC picks the subset there, GCV reruns on the subset.
TwoStageResult two_stage_bandwidth(const RegressionData& data, const Kernel& kernel,
                                   double chi_n = 0.0, const std::vector<double>& b_grid = {});

// Optional golden-section refinement of the GCV minimum inside [b_lo, b_hi].
double refine_bandwidth(const RegressionData& data, const Kernel& kernel, double b_lo,
                        double b_hi, const BandedCovariance& gamma, double tol = 1e-3);

} // namespace tvreg

#endif
