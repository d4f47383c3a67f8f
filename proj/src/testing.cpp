#include "tvreg/testing.hpp"

#include <algorithm>
#include <cmath>

#include "tvreg/common.hpp"
#include "ldlt_guard.hpp"
#include "tvreg/stats.hpp"

namespace tvreg {

WeightScheme weight_scheme_by_name(const std::string& name) {
    if (name == "identity" || name == "w1") return WeightScheme::identity;
    if (name == "inverse_covariance" || name == "w2") return WeightScheme::inverse_covariance;
    if (name == "design_moment" || name == "w3") return WeightScheme::design_moment;
    throw config_error("unknown weight scheme: " + name);
}

std::string weight_scheme_name(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::identity: return "identity";
        case WeightScheme::inverse_covariance: return "inverse_covariance";
        case WeightScheme::design_moment: return "design_moment";
    }
    throw config_error("unknown weight scheme");
}

void Hypothesis::validate(int p) const {
    const int sdim = s();
    if (sdim < 1 || sdim > p) throw config_error("restriction matrix must have between 1 and p rows");
    if (A.cols() != p) throw config_error("restriction matrix has wrong number of columns");
    if (!A.allFinite()) throw config_error("restriction matrix has non-finite entries");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
    if (qr.rank() != sdim) throw config_error("restriction matrix must have full row rank");
    if (!estimate_a) {
        if (a.size() != sdim) throw config_error("null value has wrong dimension");
        if (!a.allFinite()) throw config_error("null value has non-finite entries");
    }
}

std::vector<Eigen::MatrixXd> weight_field(const Hypothesis& hyp, const CovarianceField& cov) {
    const int G = cov.grid.size();
    const int s = hyp.s();
    std::vector<Eigen::MatrixXd> W(G);
    switch (hyp.weight) {
        case WeightScheme::identity:
            for (int g = 0; g < G; ++g) W[g] = Eigen::MatrixXd::Identity(s, s);
            break;
        case WeightScheme::inverse_covariance:
            for (int g = 0; g < G; ++g) {
                const Eigen::MatrixXd S = hyp.A * cov.Xi_hat[g] * hyp.A.transpose();
                Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
                if (ldlt_singular(ldlt))
                    throw numeric_error("restricted covariance singular in inverse weighting");
                W[g] = ldlt.solve(Eigen::MatrixXd::Identity(s, s));
                W[g] = 0.5 * (W[g] + W[g].transpose()).eval();
            }
            break;
        case WeightScheme::design_moment:
            for (int g = 0; g < G; ++g) W[g] = hyp.A * cov.M_hat[g] * hyp.A.transpose();
            break;
    }
    return W;
}

double compute_Tn(const LocalLinearFit& fit, const Eigen::MatrixXd& A, const Eigen::VectorXd& a,
                  const std::vector<Eigen::MatrixXd>& W) {
    const int G = fit.grid.size();
    if (static_cast<int>(W.size()) != G) throw config_error("weight field size does not match grid");
    if (A.cols() != fit.beta.cols()) throw config_error("restriction matrix has wrong number of columns");
    if (a.size() != A.rows()) throw config_error("null value has wrong dimension");
    Eigen::VectorXd curve(G);
    for (int g = 0; g < G; ++g) {
        const Eigen::VectorXd r = A * fit.beta.row(g).transpose() - a;
        curve[g] = r.dot(W[g] * r);
    }
    return trapezoid(fit.grid, curve, &fit.singular_flags);
}

void xi_functionals(const CovarianceField& cov, const Eigen::MatrixXd& A,
                    const std::vector<Eigen::MatrixXd>& W, const LocalLinearFit& fit,
                    double& Xi1, double& Xi2) {
    const int G = cov.grid.size();
    if (static_cast<int>(W.size()) != G) throw config_error("weight field size does not match grid");
    Eigen::VectorXd c1(G), c2(G);
    for (int g = 0; g < G; ++g) {
        // S = W^{1/2} A Xi A' W^{1/2} shares traces with B = A Xi A' W.
        const Eigen::MatrixXd B = A * cov.Xi_hat[g] * A.transpose() * W[g];
        c1[g] = B.trace();
        c2[g] = (B.array() * B.transpose().array()).sum();
    }
    Xi1 = trapezoid(cov.grid, c1, &fit.singular_flags);
    Xi2 = trapezoid(cov.grid, c2, &fit.singular_flags);
}

double studentize(double Tn, int n, double b, double Xi1, double Xi2,
                  const KernelConstants& constants, double* centering, double* scale) {
    if (n < 1 || !(b > 0.0)) throw config_error("invalid studentization inputs");
    if (!(Xi2 > 0.0)) throw numeric_error("nonpositive variance functional in studentization");
    const double center = constants.KstarAt0 * Xi1 / (n * b);
    const double sd = std::sqrt(4.0 * constants.Kstar2 * Xi2);
    if (centering) *centering = center;
    if (scale) *scale = sd;
    return n * std::sqrt(b) * (Tn - center) / sd;
}

namespace {

PipelineResult pipeline_impl(const RegressionData& data, const Hypothesis& hyp,
                             const PipelineConfig& config, const KernelConstants& constants) {
    hyp.validate(data.p());
    if (!(config.b > 0.0)) throw config_error("pipeline bandwidth must be set");

    PipelineResult out;
    const EvaluationGrid grid = config.grid_size > 0 ? EvaluationGrid::uniform(config.grid_size)
                                                     : EvaluationGrid::default_for(data.n());
    out.fit = local_linear_fit(data, config.kernel, config.b, grid);
    out.cov = estimate_covariance_field(data, out.fit, config.kernel, config.cov);
    out.W = weight_field(hyp, out.cov);
    out.a_used = hyp.estimate_a ? integrate_coefficients(out.fit, hyp.A) : hyp.a;
    out.Tn = compute_Tn(out.fit, hyp.A, out.a_used, out.W);
    xi_functionals(out.cov, hyp.A, out.W, out.fit, out.Xi1, out.Xi2);
    out.Delta = studentize(out.Tn, data.n(), config.b, out.Xi1, out.Xi2, constants,
                           &out.centering, &out.scale);
    return out;
}

} // namespace

PipelineResult run_test_pipeline(const RegressionData& data, const Hypothesis& hyp,
                                 const PipelineConfig& config) {
    return pipeline_impl(data, hyp, config, kernel_constants(config.kernel));
}

std::vector<double> simulated_null_deltas(int n, int p, const Hypothesis& hyp,
                                          const PipelineConfig& config, int n_sim,
                                          std::uint64_t seed) {
    if (n_sim < 1) throw config_error("need at least one null replicate");
    if (n < 2 * p + 2) throw config_error("sample too small for the design dimension");
    hyp.validate(p);

    Hypothesis null_hyp = hyp;
    if (!hyp.estimate_a) null_hyp.a = Eigen::VectorXd::Zero(hyp.s());

    const KernelConstants constants = kernel_constants(config.kernel);
    std::vector<double> deltas;
    deltas.reserve(n_sim);
    int failures = 0;
    RegressionData sim;
    sim.y.resize(n);
    sim.X.resize(n, p);
    for (int r = 0; r < n_sim; ++r) {
        SeedStream rng(derive_seed(seed, "null-calibration", static_cast<std::uint64_t>(r)));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) sim.X(i, j) = rng.next_gaussian();
            sim.y[i] = rng.next_gaussian();
        }
        try {
            deltas.push_back(pipeline_impl(sim, null_hyp, config, constants).Delta);
        } catch (const numeric_error&) {
            ++failures;
        }
    }
    if (failures > 0.01 * n_sim)
        throw numeric_error("null calibration failed on more than 1% of replicates");
    return deltas;
}

double simulated_null_quantile(int n, int p, const Hypothesis& hyp, const PipelineConfig& config,
                               int n_sim, std::uint64_t seed, double alpha,
                               std::vector<double>* store_deltas) {
    if (!(alpha > 0.0) || alpha >= 1.0) throw config_error("alpha must lie in (0, 1)");
    std::vector<double> deltas = simulated_null_deltas(n, p, hyp, config, n_sim, seed);
    const double q = empirical_quantile(deltas, 1.0 - alpha);
    if (store_deltas) *store_deltas = std::move(deltas);
    return q;
}

double simulated_null_quantile(int n, int p, int s, WeightScheme scheme,
                               const PipelineConfig& config, int n_sim, std::uint64_t seed,
                               double alpha, std::vector<double>* store_deltas) {
    if (s < 1 || s > p) throw config_error("restriction dimension out of range");
    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Zero(s, p);
    hyp.A.block(0, 0, s, s).setIdentity();
    hyp.a = Eigen::VectorXd::Zero(s);
    hyp.weight = scheme;
    return simulated_null_quantile(n, p, hyp, config, n_sim, seed, alpha, store_deltas);
}

TestReport run_test(const RegressionData& data, const Hypothesis& hyp, const TestConfig& config) {
    if (!(config.alpha > 0.0) || config.alpha >= 1.0) throw config_error("alpha must lie in (0, 1)");
    PipelineConfig pc;
    pc.b = config.b;
    pc.kernel = config.kernel;
    pc.cov = config.cov;
    pc.grid_size = config.grid_size;
    const PipelineResult res = run_test_pipeline(data, hyp, pc);

    TestReport report;
    report.Tn = res.Tn;
    report.centering = res.centering;
    report.scale = res.scale;
    report.Delta = res.Delta;
    report.alpha = config.alpha;
    report.n_sim = config.n_sim;
    report.seed = config.seed;
    if (config.n_sim > 0) {
        std::vector<double> deltas;
        report.critical_value = simulated_null_quantile(data.n(), data.p(), hyp, pc, config.n_sim,
                                                        config.seed, config.alpha, &deltas);
        report.critical_source = "simulated";
        int ge = 0;
        for (double d : deltas)
            if (d >= res.Delta) ++ge;
        report.p_value = (1.0 + ge) / (deltas.size() + 1.0);
    } else {
        report.critical_value = normal_quantile(1.0 - config.alpha);
        report.critical_source = "asymptotic";
        report.p_value = 1.0 - normal_cdf(res.Delta);
    }
    report.reject = res.Delta > report.critical_value;
    return report;
}

double predicted_power(const Eigen::MatrixXd& f_grid, const EvaluationGrid& grid,
                       const std::vector<Eigen::MatrixXd>& W, int n, double b, double Xi2,
                       const KernelConstants& constants, double alpha) {
    if (!(alpha > 0.0) || alpha >= 1.0) throw config_error("alpha must lie in (0, 1)");
    if (f_grid.rows() != grid.size()) throw config_error("deviation grid does not match evaluation grid");
    if (static_cast<int>(W.size()) != grid.size()) throw config_error("weight field size does not match grid");
    if (!(Xi2 > 0.0)) throw numeric_error("nonpositive variance functional");
    const int G = grid.size();
    Eigen::VectorXd curve(G);
    for (int g = 0; g < G; ++g) {
        const Eigen::VectorXd f = f_grid.row(g).transpose();
        curve[g] = f.dot(W[g] * f);
    }
    const double drift = n * std::sqrt(b) * trapezoid(grid, curve) /
                         std::sqrt(4.0 * constants.Kstar2 * Xi2);
    return normal_cdf(normal_quantile(alpha) + drift);
}

double glrt_statistic(const RegressionData& data, const Kernel& kernel, double b,
                      double* rss0, double* rss1) {
    data.validate();
    const Eigen::MatrixXd xtx = data.X.transpose() * data.X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt_singular(ldlt))
        throw numeric_error("design matrix singular in least squares fit");
    const Eigen::VectorXd beta_ols = ldlt.solve(data.X.transpose() * data.y);
    const double r0 = (data.y - data.X * beta_ols).squaredNorm();
    const double r1 = local_linear_fit(data, kernel, b).residuals.squaredNorm();
    if (!(r0 > 0.0) || !(r1 > 0.0)) throw numeric_error("degenerate residual sum of squares");
    if (rss0) *rss0 = r0;
    if (rss1) *rss1 = r1;
    return 0.5 * data.n() * std::log(r0 / r1);
}

GlrtBootstrap glrt_bootstrap(const RegressionData& data, const Kernel& kernel, double b,
                             int n_sim, std::uint64_t seed) {
    if (n_sim < 1) throw config_error("need at least one bootstrap replicate");
    data.validate();
    const int n = data.n();

    const Eigen::MatrixXd xt = data.X.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xt * data.X);
    if (ldlt_singular(ldlt))
        throw numeric_error("design matrix singular in least squares fit");
    const Eigen::VectorXd beta_ols = ldlt.solve(xt * data.y);
    const Eigen::VectorXd fitted0 = data.X * beta_ols;

    FixedDesignRefitter refitter(data, kernel, b);

    GlrtBootstrap out;
    out.seed = seed;
    out.rss0 = (data.y - fitted0).squaredNorm();
    out.rss1 = (data.y - refitter.fitted(data.y)).squaredNorm();
    if (!(out.rss0 > 0.0) || !(out.rss1 > 0.0))
        throw numeric_error("degenerate residual sum of squares");
    out.statistic = 0.5 * n * std::log(out.rss0 / out.rss1);

    const double sigma = std::sqrt(out.rss1 / n);
    out.null_stats.reserve(n_sim);
    Eigen::VectorXd ystar(n);
    int ge = 0;
    for (int r = 0; r < n_sim; ++r) {
        SeedStream rng(derive_seed(seed, "glrt-bootstrap", static_cast<std::uint64_t>(r)));
        for (int i = 0; i < n; ++i) ystar[i] = fitted0[i] + sigma * rng.next_gaussian();
        const Eigen::VectorXd bstar = ldlt.solve(xt * ystar);
        const double r0 = (ystar - data.X * bstar).squaredNorm();
        const double r1 = (ystar - refitter.fitted(ystar)).squaredNorm();
        if (!(r0 > 0.0) || !(r1 > 0.0)) throw numeric_error("degenerate bootstrap refit");
        const double stat = 0.5 * n * std::log(r0 / r1);
        out.null_stats.push_back(stat);
        if (stat >= out.statistic) ++ge;
    }
    out.p_value = (1.0 + ge) / (n_sim + 1.0);
    return out;
}

} // namespace tvreg
