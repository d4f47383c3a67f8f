#ifndef TVREG_PROCESSES_HPP
#define TVREG_PROCESSES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvreg/data.hpp"

namespace tvreg {

// Legendre polynomial P_j on [-1, 1] by the three-term recurrence, j <= 10.
double legendre(int j, double x);

struct SimulatedRegression {
    RegressionData data;
    std::vector<int> truth;  // active column indices, ascending
};

// Raw Rademacher innovation matrix driving the moving-average designs:
// (n + 60) x 6 entries for times k = 1-60 .. n, drawn in ascending k order so
// the pre-sample block is reproducible from the same stream.
Eigen::MatrixXd model_innovations(int n, std::uint64_t seed);

// Design columns x_{i,l} = sum_{j>=0} {P_l(2i/n-1)/4}^j xi_{i-j,l} with
// xi_k = Mdiamond eps_{k,1:5}, Mdiamond = (0.2^{|i-j|}); errors use the same
// series with P_6 and eps_{k,6}. The geometric ratio is bounded by 1/4, so
// truncation at 60 terms is exact to double precision.
//
// Model (i): y_i = (2i/n-1)^2 + 2 x_{i,1} + 2 log(i/n+1) x_{i,2}
//                  + 0.5 (x_{i,2}^2 + x_{i,3}^2)^{1/2} e_i,
// design [1, x_1..x_5], truth {0, 1, 2}.
SimulatedRegression simulate_model_i(int n, std::uint64_t seed);

// Model (ii): y_i = 0.4 sin(2 pi i/n) y_{i-1} + 0.3 x_{i,1}
//                   + 0.4 (2i/n-1)^3 x_{i,2} + exp(0.5 i/n - 2) eps_{i,6},
// y_0 = 0; design [x_1..x_5, ylag1..ylag3] over rows 4..n, truth {0, 1, 5}.
SimulatedRegression simulate_model_ii(int n, std::uint64_t seed);

struct NoiseSpec {
    std::string law = "gaussian";          // gaussian | rademacher
    std::function<double(double)> sigma;   // empty -> constant 1
};

// y_i = a_1(i/n) y_{i-1} + ... + a_p(i/n) y_{i-p} + sigma(i/n) eps_i from a
// zero start, burn_in pre-sample steps discarded (t clamped to [0, 1]).
// Coefficient functions must keep the companion spectral radius below
// 1 - 1e-6 over a t-grid.
Eigen::VectorXd simulate_tvar(const std::vector<std::function<double(double)>>& coeffs,
                              const NoiseSpec& noise, int n, int burn_in, std::uint64_t seed);

// max_i |y_i - z_i| where z_i reruns the recursion with coefficients frozen
// at i/n over a trailing window of matched innovations: the coupling distance
// to the locally stationary approximation.
double tvar_coupling_gap(const std::vector<std::function<double(double)>>& coeffs,
                         const NoiseSpec& noise, int n, std::uint64_t seed, int window = 400);

// AR-ARCH path: y_i = 0.5 y_{i-1} + 0.25 [1 + {1 + exp(3 - 6i/n)}^{-1}] e_i,
// e_i = (1 + 0.25 e_{i-1}^2)^{1/2} eps_i, 200 burn-in steps discarded with
// the time argument extended below zero.
Eigen::VectorXd ar_arch_path(int n, const Eigen::VectorXd& eps);  // eps length n + 200
Eigen::VectorXd simulate_ar_arch(int n, std::uint64_t seed);

// Scalar regression of y_i on y_{i-1} with exactly n rows (path length n+1).
RegressionData ar_arch_regression(int n, std::uint64_t seed);

} // namespace tvreg

#endif
