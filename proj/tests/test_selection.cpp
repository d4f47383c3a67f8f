#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tvreg/common.hpp"
#include "tvreg/rng.hpp"
#include "tvreg/selection.hpp"

using namespace tvreg;

namespace {

// Design with p columns where only `active` carry signal.
RegressionData sparse_data(int n, int p, const std::vector<int>& active, std::uint64_t seed,
                           double noise_sd = 0.5) {
    SeedStream rng(seed);
    RegressionData d;
    d.X.resize(n, p);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / n;
        d.X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) d.X(i, j) = rng.next_gaussian();
        double m = 0.0;
        for (int j : active) m += d.X(i, j) * (1.5 + std::sin(2.0 * t) + 0.3 * j);
        d.y(i) = m + noise_sd * rng.next_gaussian();
    }
    d.validate();
    return d;
}

} // namespace

TEST_CASE("penalty and criterion follow their definitions") {
    CHECK(std::fabs(vic_penalty(500) - std::pow(500.0, -0.4)) < 1e-15);
    CHECK(std::fabs(vic_value(2.5, 3, 0.1) - (std::log(2.5) + 0.3)) < 1e-15);
    CHECK_THROWS_AS(vic_value(0.0, 1, 0.1), numeric_error);
    CHECK_THROWS_AS(vic_value(-1.0, 1, 0.1), numeric_error);
}

TEST_CASE("exhaustive selection matches a brute-force enumeration") {
    const RegressionData d = sparse_data(120, 3, {0, 2}, 11);
    const Kernel K = Kernel::epanechnikov();
    const double b = 0.2;
    const SelectionReport rep = select_subset(d, K, b);

    // All 7 nonempty subsets, scored through the public per-subset RSS path.
    const LocalMoments moments(d, K, b, EvaluationGrid::default_for(d.n()));
    std::vector<std::vector<int>> all{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
    double best = 1e300;
    std::vector<int> best_set;
    for (const auto& s : all) {
        const double v = vic_value(moments.subset_rss(d, s), static_cast<int>(s.size()),
                                   rep.chi_n);
        if (v < best) {
            best = v;
            best_set = s;
        }
    }
    CHECK(rep.chosen == best_set);
    CHECK(rep.chosen == std::vector<int>{0, 2});
    REQUIRE(rep.candidates.size() == 7);
    REQUIRE(rep.rss.size() == 7);
    for (std::size_t k = 0; k < rep.candidates.size(); ++k) {
        const double rss = moments.subset_rss(d, rep.candidates[k]);
        CHECK(std::fabs(rep.rss[k] - rss) < 1e-9 * std::max(1.0, rss));
        CHECK(std::fabs(rep.vic[k] -
                        vic_value(rss, static_cast<int>(rep.candidates[k].size()), rep.chi_n)) <
              1e-12);
    }
}

TEST_CASE("duplicated signal columns are pruned by the penalty") {
    // Column 2 duplicates column 1, so {0,1} and {0,1,2} tie on RSS up to
    // numerical noise and the penalty must discard the redundant copy.
    const int n = 150;
    SeedStream rng(23);
    RegressionData d;
    d.X.resize(n, 3);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / n;
        d.X(i, 0) = 1.0;
        d.X(i, 1) = rng.next_gaussian();
        d.X(i, 2) = d.X(i, 1) + 0.01 * rng.next_gaussian();
        d.y(i) = 1.0 + (2.0 - t) * d.X(i, 1) + 0.4 * rng.next_gaussian();
    }
    d.validate();
    const SelectionReport rep = select_subset(d, Kernel::epanechnikov(), 0.2);
    CHECK(rep.chosen.size() == 2);
    CHECK(rep.chosen[0] == 0);
    // Either near-duplicate is an acceptable second member.
    CHECK((rep.chosen[1] == 1 || rep.chosen[1] == 2));
}

TEST_CASE("penalty scaling controls the chosen size") {
    const RegressionData d = sparse_data(120, 4, {0, 1}, 31, 0.8);
    // A huge penalty forces a singleton; a vanishing one keeps everything.
    const SelectionReport small = select_subset(d, Kernel::epanechnikov(), 0.2, 5.0);
    CHECK(small.chosen.size() == 1);
    const SelectionReport big = select_subset(d, Kernel::epanechnikov(), 0.2, 1e-9);
    CHECK(big.chosen.size() == 4);
}

TEST_CASE("banded toeplitz cholesky solves against a dense oracle") {
    // AR(1)-like autocovariances, clearly positive definite.
    BandedCovariance cov;
    cov.n = 40;
    cov.band = 3;
    cov.gamma.resize(4);
    cov.gamma << 2.0, 1.0, 0.5, 0.25;
    cov.diag_shift = 0.0;
    const Eigen::MatrixXd dense = cov.to_dense();
    CHECK(dense.rows() == 40);
    CHECK(dense(0, 0) == 2.0);
    CHECK(dense(0, 3) == 0.25);
    CHECK(dense(0, 4) == 0.0);
    CHECK((dense - dense.transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    const BandedCholesky chol(cov);
    SeedStream rng(3);
    Eigen::VectorXd rhs(40);
    for (int i = 0; i < 40; ++i) rhs(i) = rng.next_gaussian();
    const Eigen::VectorXd x = chol.solve(rhs);
    const Eigen::VectorXd x0 = dense.ldlt().solve(rhs);
    CHECK((x - x0).lpNorm<Eigen::Infinity>() < 1e-8);

    // The shift participates in both the factorization and the dense form.
    BandedCovariance shifted = cov;
    shifted.diag_shift = 0.7;
    const Eigen::VectorXd xs = BandedCholesky(shifted).solve(rhs);
    const Eigen::VectorXd xs0 = shifted.to_dense().ldlt().solve(rhs);
    CHECK((xs - xs0).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(shifted.to_dense()(0, 0) == doctest::Approx(2.7));
}

TEST_CASE("banded_gamma estimates autocovariances and fixes indefiniteness") {
    // Deterministic residual series with known sample autocovariances.
    const int n = 500;
    Eigen::VectorXd resid(n);
    SeedStream rng(17);
    double prev = 0.0;
    for (int i = 0; i < n; ++i) {
        prev = 0.6 * prev + rng.next_gaussian();
        resid(i) = prev;
    }
    const BandedCovariance cov = banded_gamma(resid, 2);
    CHECK(cov.band == 2);
    CHECK(cov.n == n);
    // Sample autocovariance oracle: gamma_k = n^{-1} sum (r_i - rbar)(r_{i+k} - rbar).
    const double rbar = resid.mean();
    for (int k = 0; k <= 2; ++k) {
        double g = 0.0;
        for (int i = 0; i + k < n; ++i) g += (resid(i) - rbar) * (resid(i + k) - rbar);
        g /= n;
        CHECK(std::fabs(cov.gamma(k) - g) < 1e-10);
    }
    // The shifted matrix must be positive definite.
    const Eigen::LLT<Eigen::MatrixXd> llt(cov.to_dense());
    CHECK(llt.info() == Eigen::Success);

    // A hostile series whose raw banded Toeplitz is indefinite still yields a
    // factorizable matrix after the automatic shift.
    Eigen::VectorXd alt(n);
    for (int i = 0; i < n; ++i) alt(i) = (i % 2 == 0) ? 1.0 : -1.0;
    const BandedCovariance cov2 = banded_gamma(alt, 6);
    const Eigen::LLT<Eigen::MatrixXd> llt2(cov2.to_dense());
    CHECK(llt2.info() == Eigen::Success);

    // Automatic band choice stays within the cap.
    const BandedCovariance cov3 = banded_gamma(resid);
    CHECK(cov3.band >= 0);
    CHECK(cov3.band <= static_cast<int>(std::sqrt(static_cast<double>(n))));
}

TEST_CASE("gcv equals its definition on a small sample") {
    const RegressionData d = sparse_data(50, 2, {0, 1}, 41);
    const Kernel K = Kernel::epanechnikov();
    const BandedCovariance gamma = banded_gamma(local_linear_fit(d, K, 0.3).residuals, 1);
    const double b = 0.35;
    const double score = gcv(d, K, b, gamma);

    const LocalLinearFit fit = local_linear_fit(d, K, b);
    const BandedCholesky chol(gamma);
    const Eigen::VectorXd r = fit.residuals;
    const double quad = r.dot(chol.solve(r)) / d.n();
    const double denom = 1.0 - fit.hat_trace / d.n();
    CHECK(std::fabs(score - quad / (denom * denom)) < 1e-10 * std::max(1.0, score));
}

TEST_CASE("bandwidth selection tracks the gcv curve over the grid") {
    const RegressionData d = sparse_data(150, 2, {0, 1}, 53);
    const Kernel K = Kernel::epanechnikov();
    const BandedCovariance gamma = banded_gamma(local_linear_fit(d, K, 0.25).residuals);
    const std::vector<double> grid = default_b_grid();
    CHECK(grid.front() == doctest::Approx(0.05));
    CHECK(grid.back() == doctest::Approx(0.95));
    CHECK(grid.size() == 91);

    double best_b = 0.0, best = 1e300;
    for (double b : grid) {
        double s;
        try {
            s = gcv(d, K, b, gamma);
        } catch (const numeric_error&) {
            continue;
        }
        if (s < best) {
            best = s;
            best_b = b;
        }
    }
    CHECK(select_gcv_bandwidth(d, K, grid, gamma) == doctest::Approx(best_b));
}

TEST_CASE("two-stage pipeline returns coherent pieces") {
    const RegressionData d = sparse_data(200, 4, {0, 2}, 61, 0.4);
    const Kernel K = Kernel::epanechnikov();
    const TwoStageResult ts = two_stage_bandwidth(d, K);
    CHECK(ts.b_pilot > 0.0);
    CHECK(ts.b_pilot < 1.0);
    CHECK(ts.b_final > 0.0);
    CHECK(ts.selection.bandwidth_pilot == doctest::Approx(ts.b_pilot));
    CHECK(ts.selection.bandwidth_final == doctest::Approx(ts.b_final));
    CHECK(ts.selection.chosen == std::vector<int>{0, 2});
    CHECK(ts.gamma.n == d.n());

    // The final bandwidth re-minimizes GCV on the chosen columns.
    RegressionData sub;
    sub.y = d.y;
    sub.X.resize(d.n(), 2);
    sub.X.col(0) = d.X.col(0);
    sub.X.col(1) = d.X.col(2);
    CHECK(std::fabs(select_gcv_bandwidth(sub, K, default_b_grid(), ts.gamma) - ts.b_final) <
          1e-12);
}

TEST_CASE("golden-section refinement lands inside the bracket at a no-worse score") {
    const RegressionData d = sparse_data(120, 2, {0, 1}, 71);
    const Kernel K = Kernel::epanechnikov();
    const BandedCovariance gamma = banded_gamma(local_linear_fit(d, K, 0.25).residuals);
    const double coarse = select_gcv_bandwidth(d, K, default_b_grid(), gamma);
    const double lo = std::max(0.05, coarse - 0.02);
    const double hi = std::min(0.95, coarse + 0.02);
    const double fine = refine_bandwidth(d, K, lo, hi, gamma);
    CHECK(fine >= lo);
    CHECK(fine <= hi);
    CHECK(gcv(d, K, fine, gamma) <= gcv(d, K, coarse, gamma) + 1e-10);
}

TEST_CASE("penalty diverges slower than any polynomial rate") {
    CHECK(vic_penalty(100) > vic_penalty(1000));
    CHECK(vic_penalty(1000) > vic_penalty(10000));
    // n^{2/5} chi_n is constant: the normalization pins the rate.
    CHECK(std::fabs(std::pow(100.0, 0.4) * vic_penalty(100) - 1.0) < 1e-12);
    CHECK(std::fabs(std::pow(4000.0, 0.4) * vic_penalty(4000) - 1.0) < 1e-12);
}
