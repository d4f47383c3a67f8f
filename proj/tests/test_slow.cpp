#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tvreg/common.hpp"
#include "tvreg/covariance.hpp"
#include "tvreg/grid.hpp"
#include "tvreg/locfit.hpp"
#include "tvreg/processes.hpp"
#include "tvreg/rng.hpp"
#include "tvreg/selection.hpp"
#include "tvreg/stats.hpp"
#include "tvreg/testing.hpp"

using namespace tvreg;

namespace {

// Scalar design x ~ N(0,1), y = x c (t - 1/2) + N(0,1): a drifting deviation
// from the constant-zero null with unit population covariance field.
RegressionData drift_data(int n, double c, std::uint64_t seed) {
    SeedStream rng(seed);
    RegressionData d;
    d.X.resize(n, 1);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / n;
        d.X(i, 0) = rng.next_gaussian();
        d.y(i) = d.X(i, 0) * c * (t - 0.5) + rng.next_gaussian();
    }
    return d;
}

} // namespace

TEST_SUITE("slow") {

TEST_CASE("variable selection recovers the sparse truth at moderate size") {
    const int reps = 30, n = 300;
    int correct = 0;
    for (int r = 0; r < reps; ++r) {
        const SimulatedRegression sim = simulate_model_i(n, derive_seed(404, "sel-mini", r));
        const SelectionReport rep = select_subset(sim.data, Kernel::epanechnikov(), 0.2);
        if (rep.chosen == sim.truth) ++correct;
    }
    CHECK(correct >= 24); // 80% of 30
}

TEST_CASE("two-stage bandwidths concentrate near the typical scale") {
    const int reps = 21, n = 300;
    std::vector<double> bs;
    for (int r = 0; r < reps; ++r) {
        const SimulatedRegression sim = simulate_model_i(n, derive_seed(505, "bw-mini", r));
        bs.push_back(two_stage_bandwidth(sim.data, Kernel::epanechnikov()).b_final);
    }
    const double med = median(bs);
    CHECK(med >= 0.10);
    CHECK(med <= 0.45);
}

TEST_CASE("monte carlo power tracks the asymptotic prediction") {
    const int n = 200, B = 500, reps = 160;
    const double alpha = 0.05, b = 0.2, c = 0.45;

    PipelineConfig pc;
    pc.b = b;
    const double crit =
        simulated_null_quantile(n, 1, 1, WeightScheme::identity, pc, B, 2024, alpha);

    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Identity(1, 1);
    hyp.a = Eigen::VectorXd::Zero(1);

    int rej_alt = 0, rej_null = 0;
    for (int r = 0; r < reps; ++r) {
        const RegressionData alt = drift_data(n, c, derive_seed(7100, "pow-alt", r));
        if (run_test_pipeline(alt, hyp, pc).Delta > crit) ++rej_alt;
        const RegressionData nul = drift_data(n, 0.0, derive_seed(7100, "pow-nul", r));
        if (run_test_pipeline(nul, hyp, pc).Delta > crit) ++rej_null;
    }
    const double mc_power = static_cast<double>(rej_alt) / reps;
    const double mc_size = static_cast<double>(rej_null) / reps;

    // Population covariance field is the identity, so Xi2 = 1 and the local
    // drift is n sqrt(b) c^2 int (t-1/2)^2 dt / sqrt(4 Kstar2).
    const int G = 401;
    const EvaluationGrid grid = EvaluationGrid::uniform(G);
    Eigen::MatrixXd f(G, 1);
    for (int g = 0; g < G; ++g) f(g, 0) = c * (grid.points[g] - 0.5);
    const std::vector<Eigen::MatrixXd> W(G, Eigen::MatrixXd::Identity(1, 1));
    const KernelConstants kc = kernel_constants(Kernel::epanechnikov());
    const double predicted = predicted_power(f, grid, W, n, b, 1.0, kc, alpha);

    CHECK(predicted > 0.2);
    CHECK(predicted < 0.9);

    // Independent recomputation of the asymptotic power formula.
    Eigen::VectorXd quad(G);
    for (int g = 0; g < G; ++g) quad[g] = f.row(g) * W[g] * f.row(g).transpose();
    const double shift =
        n * std::sqrt(b) * trapezoid(grid, quad) / std::sqrt(4.0 * kc.Kstar2 * 1.0);
    const double oracle = normal_cdf(normal_quantile(alpha) + shift);
    CHECK(std::fabs(predicted - oracle) < 1e-12);

    // The studentized statistic approaches its normal limit slowly: at this
    // scale the simulated null 95% quantile sits near 4, far above 1.645, so
    // the asymptotic formula overstates power against simulated critical
    // values. The Monte Carlo run must still show genuine power, a size near
    // the nominal level, and sit below the asymptotic prediction.
    CHECK(mc_power >= 0.12);
    CHECK(mc_size < 0.12);
    CHECK(mc_power > mc_size + 0.05);
    CHECK(predicted > mc_power);
}

TEST_CASE("null statistics are exchangeable with the calibration draw") {
    const int n = 200, B = 500, reps = 160;
    PipelineConfig pc;
    pc.b = 0.2;
    std::vector<double> null_draw;
    simulated_null_quantile(n, 1, 1, WeightScheme::identity, pc, B, 2024, 0.05, &null_draw);

    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Identity(1, 1);
    hyp.a = Eigen::VectorXd::Zero(1);
    std::vector<double> observed;
    for (int r = 0; r < reps; ++r) {
        const RegressionData nul = drift_data(n, 0.0, derive_seed(8200, "ks-null", r));
        observed.push_back(run_test_pipeline(nul, hyp, pc).Delta);
    }
    // 1% critical value for the two-sample KS distance at these sizes.
    CHECK(ks_statistic(observed, null_draw) < 0.15);
}

TEST_CASE("integrated intervals cover a constant coefficient") {
    const int n = 400, reps = 100;
    const double target = 2.0;
    Eigen::MatrixXd A(1, 2);
    A << 0.0, 1.0;
    int covered = 0;
    for (int r = 0; r < reps; ++r) {
        SeedStream rng(derive_seed(9300, "cover", r));
        RegressionData d;
        d.X.resize(n, 2);
        d.y.resize(n);
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i + 1) / n;
            d.X(i, 0) = 1.0;
            d.X(i, 1) = rng.next_gaussian();
            e = 0.3 * e + rng.next_gaussian();
            d.y(i) = (1.0 + std::sin(2.0 * 3.14159265358979323846 * t)) +
                     target * d.X(i, 1) + e;
        }
        const Kernel K = Kernel::epanechnikov();
        const LocalLinearFit fit = local_linear_fit(d, K, 0.2);
        const CovarianceField cov = estimate_covariance_field(d, fit, K);
        const Theorem1Ci ci = theorem1_ci(fit, A, cov, 0.95, K);
        if (ci.lower(0) <= target && target <= ci.upper(0)) ++covered;
    }
    CHECK(covered >= 87);
}

} // TEST_SUITE
