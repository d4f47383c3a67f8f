#ifndef TVREG_TESTING_HPP
#define TVREG_TESTING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tvreg/covariance.hpp"
#include "tvreg/data.hpp"
#include "tvreg/kernels.hpp"
#include "tvreg/locfit.hpp"
#include "tvreg/rng.hpp"

namespace tvreg {

// W1 = I_s, W2(t) = {A Xi_hat(t) A'}^{-1}, W3(t) = A M_hat(t) A'.
enum class WeightScheme { identity, inverse_covariance, design_moment };

WeightScheme weight_scheme_by_name(const std::string& name);
std::string weight_scheme_name(WeightScheme scheme);

// H0: A beta(t) = a for all t. When estimate_a is set the null value is the
// estimated integral int A beta dt, i.e. the null of a constant restriction.
struct Hypothesis {
    Eigen::MatrixXd A;
    Eigen::VectorXd a;
    bool estimate_a = false;
    WeightScheme weight = WeightScheme::identity;

    int s() const { return static_cast<int>(A.rows()); }
    void validate(int p) const;
};

struct PipelineConfig {
    double b = 0.0;                       // fit bandwidth, must be set
    Kernel kernel = Kernel::epanechnikov();
    CovariancePolicy cov;
    int grid_size = 0;                    // 0 -> default i/n grid
};

struct PipelineResult {
    LocalLinearFit fit;
    CovarianceField cov;
    std::vector<Eigen::MatrixXd> W;       // weight matrix per grid point
    Eigen::VectorXd a_used;
    double Tn = 0.0;
    double Xi1 = 0.0, Xi2 = 0.0;          // int tr(S^l) dt, S = W^{1/2} A Xi A' W^{1/2}
    double centering = 0.0, scale = 0.0;
    double Delta = 0.0;
};

std::vector<Eigen::MatrixXd> weight_field(const Hypothesis& hyp, const CovarianceField& cov);

// T_n = int (A beta_tilde - a)' W(t) (A beta_tilde - a) dt.
double compute_Tn(const LocalLinearFit& fit, const Eigen::MatrixXd& A, const Eigen::VectorXd& a,
                  const std::vector<Eigen::MatrixXd>& W);

// Xi_{A,W,l} = int tr{(A Xi A' W)^l} dt for l = 1, 2.
void xi_functionals(const CovarianceField& cov, const Eigen::MatrixXd& A,
                    const std::vector<Eigen::MatrixXd>& W, const LocalLinearFit& fit,
                    double& Xi1, double& Xi2);

// Delta = n sqrt(b) {T_n - (nb)^{-1} Kstar(0) Xi1} / sqrt(4 Kstar2 Xi2).
double studentize(double Tn, int n, double b, double Xi1, double Xi2,
                  const KernelConstants& constants, double* centering = nullptr,
                  double* scale = nullptr);

PipelineResult run_test_pipeline(const RegressionData& data, const Hypothesis& hyp,
                                 const PipelineConfig& config);

// Simulated null distribution of Delta: replicates draw x and y iid standard
// normal (a null with constant coefficients), run the identical pipeline, and
// return the realized Delta values. More than 1% degenerate replicates is an
// error. Under a fixed a the null replicates use a = 0; under estimate_a the
// null value is re-estimated per replicate.
std::vector<double> simulated_null_deltas(int n, int p, const Hypothesis& hyp,
                                          const PipelineConfig& config, int n_sim,
                                          std::uint64_t seed);

double simulated_null_quantile(int n, int p, const Hypothesis& hyp, const PipelineConfig& config,
                               int n_sim, std::uint64_t seed, double alpha,
                               std::vector<double>* store_deltas = nullptr);

// Canonical restriction A = [I_s 0], a = 0, for callers that only know the
// dimensions.
double simulated_null_quantile(int n, int p, int s, WeightScheme scheme,
                               const PipelineConfig& config, int n_sim, std::uint64_t seed,
                               double alpha, std::vector<double>* store_deltas = nullptr);

struct TestConfig {
    double b = 0.0;
    Kernel kernel = Kernel::epanechnikov();
    CovariancePolicy cov;
    double alpha = 0.05;
    int n_sim = 0;              // 0 -> asymptotic normal critical value
    std::uint64_t seed = 0;
    int grid_size = 0;
};

struct TestReport {
    double Tn = 0.0;
    double centering = 0.0;
    double scale = 0.0;
    double Delta = 0.0;
    double alpha = 0.0;
    double critical_value = 0.0;
    std::string critical_source;   // "asymptotic" or "simulated"
    double p_value = 0.0;
    bool reject = false;           // Delta > critical_value
    int n_sim = 0;
    std::uint64_t seed = 0;
};

TestReport run_test(const RegressionData& data, const Hypothesis& hyp, const TestConfig& config);

// Local power of the level-alpha test against the drifting deviation
// f(t) = A beta(t) - a: Phi{z_alpha + n sqrt(b) int f' W f dt / sqrt(4 Kstar2 Xi2)}.
double predicted_power(const Eigen::MatrixXd& f_grid, const EvaluationGrid& grid,
                       const std::vector<Eigen::MatrixXd>& W, int n, double b, double Xi2,
                       const KernelConstants& constants, double alpha);

// Generalized likelihood ratio comparison: (n/2) log(RSS_ols / RSS_locfit).
double glrt_statistic(const RegressionData& data, const Kernel& kernel, double b,
                      double* rss0 = nullptr, double* rss1 = nullptr);

struct GlrtBootstrap {
    double statistic = 0.0;
    double rss0 = 0.0, rss1 = 0.0;
    std::vector<double> null_stats;  // bootstrap draws, unsorted
    double p_value = 0.0;
    std::uint64_t seed = 0;
};

// Parametric bootstrap under the constant-coefficient null: responses are
// regenerated as X beta_ols + N(0, RSS_locfit/n) noise on the fixed design.
GlrtBootstrap glrt_bootstrap(const RegressionData& data, const Kernel& kernel, double b,
                             int n_sim, std::uint64_t seed);

} // namespace tvreg

#endif
